"""
Pipeline orchestration
Runs ingest -> classify -> marketvars/sentiment -> regressions and reads and
writes the normalized intermediate files shared by the CLI commands
"""
import json
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

import pandas as pd
from loguru import logger

from common import (
    DEFAULT_BOOTSTRAP_REPLICATES,
    DEFAULT_CI_LEVEL,
    DEFAULT_DROP_LAST_MINUTES,
    DEFAULT_SEED,
    DEFAULT_SHUFFLES,
    DEFAULT_THETA,
    REGRESSION_PRESETS,
)
from utils.classify import build_flow_series, flows_to_frame
from utils.ingest import (
    NORMALIZED_TRANSACTION_SCHEMA,
    HeadlineBuckets,
    HeadlineRecord,
    InvestorCategory,
    TradingCalendar,
    bucket_headlines_by_day,
    dedupe_headlines,
    filter_trading_hours,
    format_timestamp,
    headlines_to_jsonl,
    load_offset_rules,
    parse_headlines,
    parse_prices,
    parse_transactions,
    prices_to_frame,
    transactions_to_frame,
)
from utils.marketvars import build_market_series, market_to_frame
from utils.sentiment import build_news_series, load_lexicon, news_to_frame
from utils.stats import AlignedTriple, fit_regression

# File names inside an ingest output directory
INGEST_FILES = {
    'transactions': 'transactions.csv',
    'prices': 'prices.csv',
    'headlines_all': 'headlines_all.jsonl',
    'headlines': 'headlines.csv',
    'summary': 'ingest_summary.json',
}

# File names of the daily series
SERIES_FILES = {"flows": "flows.csv", "market": "market.csv", "news": "news.csv"}


@dataclass
class IngestResult:
    transactions: list
    prices: list
    calendar: TradingCalendar
    headlines_all: list  # deduplicated, before the trading-hours filter
    buckets: HeadlineBuckets
    tallies: dict = field(default_factory=dict)


def write_csv(df, path, **kwargs):
    df.to_csv(path, index=False, lineterminator="\n", **kwargs)


def write_json(data, path):
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Ingest
# ---------------------------------------------------------------------------

def run_ingest(transactions_path, prices_path, headlines_path, drop_last_minutes=DEFAULT_DROP_LAST_MINUTES,
               offset_rules_path=None, schema=None, delimiter=","):
    """
    Parse and validate the three inputs and bucket the headlines.

    Headlines are deduplicated before the trading-hours filter, so the first
    release decides whether a headline falls inside the window.

    Args:
        offset_rules_path (str, optional): Local-time offset rules; when given,
            headline timestamps without an offset are read as local wall-clock times

    Returns:
        IngestResult
    """
    transactions = parse_transactions(transactions_path, schema=schema, delimiter=delimiter)
    prices = parse_prices(prices_path, delimiter=delimiter)
    calendar = TradingCalendar.from_prices(prices)

    rules = load_offset_rules(offset_rules_path) if offset_rules_path else None
    raw = parse_headlines(headlines_path, delimiter=delimiter, offset_rules=rules)
    unique = dedupe_headlines(raw)
    windowed = filter_trading_hours(unique, drop_last_minutes)
    buckets = bucket_headlines_by_day(windowed, calendar)

    tallies = {
        'transaction_rows': len(transactions),
        'inactive_rows': sum(1 for r in transactions if not r.is_active),
        'trading_days': len(calendar),
        'headlines_raw': len(raw),
        'duplicates_removed': len(raw) - len(unique),
        'outside_window': len(unique) - len(windowed),
        'non_trading_day': buckets.discarded,
        'bucketed': buckets.total,
        'drop_last_minutes': drop_last_minutes,
    }
    logger.info(
        f"✅ Ingest: {tallies['transaction_rows']} transactions, {tallies['trading_days']} days, "
        f"{tallies['bucketed']} headlines bucketed"
    )
    return IngestResult(transactions, prices, calendar, unique, buckets, tallies)


def write_ingest(result, out_dir):
    """Write the normalized intermediate files of an ingest run."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    write_csv(transactions_to_frame(result.transactions), out / INGEST_FILES['transactions'])
    write_csv(prices_to_frame(result.prices), out / INGEST_FILES['prices'])
    (out / INGEST_FILES['headlines_all']).write_text(headlines_to_jsonl(result.headlines_all), encoding="utf-8")

    rows = [
        {"day": day.isoformat(), "ts": format_timestamp(h.timestamp), "text": h.text}
        for day in sorted(result.buckets.buckets)
        for h in result.buckets.buckets[day]
    ]
    write_csv(pd.DataFrame(rows, columns=["day", "ts", "text"]), out / INGEST_FILES['headlines'])
    write_json(result.tallies, out / INGEST_FILES['summary'])
    return out


def read_buckets(in_dir, calendar):
    """Rebuild the day -> headlines map from an ingest directory."""
    frame = pd.read_csv(Path(in_dir) / INGEST_FILES['headlines'], dtype=str, keep_default_na=False)
    buckets = HeadlineBuckets()
    for day_token, ts, text in frame[["day", "ts", "text"]].itertuples(index=False, name=None):
        day = date.fromisoformat(day_token)
        if day not in calendar:
            raise ValueError(f"Bucketed headline dated {day} lies outside the trading calendar")
        stamp = pd.Timestamp(ts).tz_convert("UTC").to_pydatetime()
        buckets.buckets.setdefault(day, []).append(HeadlineRecord(stamp, text))
    return buckets


def read_ingest(in_dir):
    """Load an ingest directory written by write_ingest."""
    path = Path(in_dir)
    if not path.is_dir():
        raise ValueError(f"Ingest directory {path} does not exist")
    transactions = parse_transactions(path / INGEST_FILES['transactions'], schema=NORMALIZED_TRANSACTION_SCHEMA)
    prices = parse_prices(path / INGEST_FILES['prices'])
    calendar = TradingCalendar.from_prices(prices)
    headlines_all = parse_headlines(path / INGEST_FILES['headlines_all'], fmt="jsonl")
    buckets = read_buckets(path, calendar)

    summary = path / INGEST_FILES['summary']
    tallies = json.loads(summary.read_text(encoding="utf-8")) if summary.exists() else {}
    return IngestResult(transactions, prices, calendar, headlines_all, buckets, tallies)


# ---------------------------------------------------------------------------
# Daily series
# ---------------------------------------------------------------------------

def build_daily_frames(result, lexicon, theta=DEFAULT_THETA):
    """
    Returns:
        tuple[pd.DataFrame, pd.DataFrame, pd.DataFrame]: flows, market and news
            frames, dense over the trading calendar
    """
    flows = flows_to_frame(build_flow_series(result.transactions, result.calendar, theta))
    market = market_to_frame(build_market_series(result.prices, result.calendar))
    news = news_to_frame(build_news_series(result.buckets.buckets, lexicon, result.calendar))
    return flows, market, news


def write_daily_frames(flows, market, news, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, df in (("flows", flows), ("market", market), ("news", news)):
        write_csv(df, out / SERIES_FILES[name])
    return out


def read_daily_frames(in_dir):
    path = Path(in_dir)
    frames = []
    for name in ("flows", "market", "news"):
        file = path / SERIES_FILES[name]
        if not file.exists():
            raise ValueError(f"Missing {SERIES_FILES[name]} in {path}")
        frames.append(pd.read_csv(file))
    return tuple(frames)


def category_panel(flows, market, news, category):
    """
    Join one category's flow columns with the market and news series on day.

    Returns:
        pd.DataFrame: indexed by day; undefined values stay NaN
    """
    name = InvestorCategory.from_token(category).value
    own = flows[flows['category'] == name].drop(columns="category").set_index("day")
    return own.join(market.set_index("day"), how="outer").join(news.set_index("day"), how="outer").sort_index()


def load_column(ref, category=None):
    """
    Load one series from a 'file:column' reference.

    Files with a category column (flows.csv) need a category; the series is
    indexed by day.
    """
    if ":" not in ref:
        raise ValueError(f"Series reference {ref!r} must look like FILE:COLUMN")
    file, column = ref.rsplit(":", 1)
    df = pd.read_csv(file)
    if column not in df.columns:
        raise ValueError(f"Column {column!r} not found in {file}; available: {list(df.columns)}")
    if "day" not in df.columns:
        raise ValueError(f"{file} has no day column")

    if "category" in df.columns:
        if category is None:
            raise ValueError(f"{file} holds several categories; pass a category")
        df = df[df['category'] == InvestorCategory.from_token(category).value]
        if df.empty:
            raise ValueError(f"No rows for category {category} in {file}")

    series = df.set_index("day")[column].astype(float)
    series.name = column
    return series


# ---------------------------------------------------------------------------
# Regressions
# ---------------------------------------------------------------------------

def run_regression_suite(flows, market, news, replicates=DEFAULT_BOOTSTRAP_REPLICATES, seed=DEFAULT_SEED,
                         level=DEFAULT_CI_LEVEL, presets=None, categories=None, n_shuffles=DEFAULT_SHUFFLES):
    """
    Fit every regression preset for every category.

    A category whose series cannot be fitted (too few defined rows, a
    constant series, collinear regressors) is skipped with a warning.

    Returns:
        dict: preset name -> list of RegressionReport in category order
    """
    presets = presets or REGRESSION_PRESETS
    categories = [InvestorCategory.from_token(c) for c in (categories or list(InvestorCategory))]

    results = {}
    for preset, columns in presets.items():
        reports = []
        for category in categories:
            panel = category_panel(flows, market, news, category)
            try:
                triple = AlignedTriple.from_frame(panel, columns['y'], columns['x1'], columns['x2'])
                report = fit_regression(triple, replicates, seed, level, category.value, n_shuffles)
            except ValueError as e:
                logger.warning(f"⚠️ Skipping {preset} for {category.value}: {e}")
                continue
            report.extra['preset'] = preset
            reports.append(report)
        results[preset] = reports
    return results


def run_pipeline(transactions_path, prices_path, headlines_path, lexicon_path, out_dir,
                 theta=DEFAULT_THETA, drop_last_minutes=DEFAULT_DROP_LAST_MINUTES,
                 replicates=DEFAULT_BOOTSTRAP_REPLICATES, seed=DEFAULT_SEED, level=DEFAULT_CI_LEVEL,
                 offset_rules_path=None, n_shuffles=DEFAULT_SHUFFLES):
    """
    Run the whole analysis and write every intermediate file.

    Layout of out_dir: ingest/ (normalized inputs), flows.csv, market.csv,
    news.csv and regressions.json (a list of report objects with a preset key).

    Returns:
        dict: preset name -> list of RegressionReport
    """
    out = Path(out_dir)
    result = run_ingest(transactions_path, prices_path, headlines_path, drop_last_minutes, offset_rules_path)
    write_ingest(result, out / "ingest")

    flows, market, news = build_daily_frames(result, load_lexicon(lexicon_path), theta)
    write_daily_frames(flows, market, news, out)

    reports = run_regression_suite(flows, market, news, replicates, seed, level, n_shuffles=n_shuffles)
    write_json([r.to_dict() for preset in reports.values() for r in preset], out / "regressions.json")
    logger.info(f"✅ Pipeline outputs written to {out}")
    return reports


if __name__ == "__main__":
    """Small synthetic run"""
    import tempfile

    from utils.synth import SynthConfig, generate_market_files

    with tempfile.TemporaryDirectory() as tmp:
        paths = generate_market_files(SynthConfig(n_days=120, seed=3), Path(tmp) / "synth")
        reports = run_pipeline(
            paths['transactions'], paths['prices'], paths['headlines'], paths['lexicon'], Path(tmp) / "run",
            replicates=1000,
        )
        for preset, items in reports.items():
            for r in items:
                print(f"{preset:14s} {r.category:13s} a1={r.alpha1:+.3f} a2={r.alpha2:+.3f}")
