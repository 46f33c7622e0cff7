"""
newsflow command line
Investor flows, news sentiment and regression reports from the command line

Usage:
    python newsflow.py synth --out data/synth
    python newsflow.py ingest --transactions data/synth/transactions.csv \
        --prices data/synth/prices.csv --headlines data/synth/headlines.jsonl --out data/ingest
    python newsflow.py pipeline --synth-config synth.json --out data/run
"""
import functools
import json
from pathlib import Path

import click
from loguru import logger

from common import DEFAULT_SHUFFLES
from utils.classify import build_flow_series, flows_to_frame
from utils.config import load_settings_from_env
from utils.ingest import TradingCalendar, parse_headlines, parse_prices
from utils.marketvars import build_market_series, market_to_frame
from utils.pipeline import (
    INGEST_FILES,
    load_column,
    read_buckets,
    read_daily_frames,
    read_ingest,
    run_ingest,
    run_pipeline,
    write_csv,
    write_ingest,
    write_json,
)
from utils.report import (
    FORMATS,
    acf_table,
    dataset_table,
    intraday_histogram,
    panel_summary,
    regression_table,
    render_table,
)
from utils.sentiment import build_news_series, load_lexicon, news_to_frame
from utils.stats import AlignedTriple, fit_regression
from utils.synth import SynthConfig, generate_market_files

EXISTING_FILE = click.Path(exists=True, dir_okay=False)
EXISTING_DIR = click.Path(exists=True, file_okay=False)


def _configure_logging(level):
    logger.remove()
    # resolve stderr per message so redirected streams are honoured
    logger.add(lambda message: click.echo(message, err=True, nl=False), level=level,
               format="{time:HH:mm:ss} | {level: <8} | {message}")


def _handle_errors(func):
    """Report domain errors as a one-line CLI error with exit code 1."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (ValueError, ArithmeticError) as e:
            logger.error(f"❌ {e}")
            raise click.ClickException(str(e))

    return wrapper


def _emit(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
        logger.info(f"✅ Wrote {out}")
    else:
        click.echo(text, nl=False)


@click.group()
@click.option("--log-level", default=None, help="Log level (default NEWSFLOW_LOG_LEVEL or INFO)")
@click.pass_context
def cli(ctx, log_level):
    """Investor-flow and news-sentiment analysis."""
    try:
        settings = load_settings_from_env()
    except ValueError as e:
        raise click.ClickException(str(e))
    _configure_logging((log_level or settings.log_level).upper())
    ctx.obj = settings


@cli.command()
@click.option("--transactions", type=EXISTING_FILE, required=True)
@click.option("--prices", type=EXISTING_FILE, required=True)
@click.option("--headlines", type=EXISTING_FILE, required=True)
@click.option("--drop-last-minutes", type=int, default=None, help="Shorten the headline window (e.g. 10)")
@click.option("--assume-local-tz", "offset_rules", type=EXISTING_FILE, default=None,
              help="JSON offset rules; headline times without an offset are local wall-clock")
@click.option("--delimiter", default=",", show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.pass_obj
@_handle_errors
def ingest(settings, transactions, prices, headlines, drop_last_minutes, offset_rules, delimiter, out):
    """Validate inputs and write normalized intermediate files."""
    drop = settings.drop_last_minutes if drop_last_minutes is None else drop_last_minutes
    result = run_ingest(transactions, prices, headlines, drop, offset_rules, delimiter=delimiter)
    write_ingest(result, out)


@cli.command()
@click.option("--in", "in_dir", type=EXISTING_DIR, required=True, help="Ingest output directory")
@click.option("--theta", type=float, default=None)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.pass_obj
@_handle_errors
def classify(settings, in_dir, theta, out):
    """Per-category daily buyer/seller counts and imbalances."""
    result = read_ingest(in_dir)
    series = build_flow_series(result.transactions, result.calendar, settings.theta if theta is None else theta)
    write_csv(flows_to_frame(series), out)


@cli.command()
@click.option("--prices", type=EXISTING_FILE, required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@_handle_errors
def marketvars(prices, out):
    """Daily log return and high-low volatility."""
    records = parse_prices(prices)
    write_csv(market_to_frame(build_market_series(records, TradingCalendar.from_prices(records))), out)


@cli.command()
@click.option("--buckets", "in_dir", type=EXISTING_DIR, required=True, help="Ingest output directory")
@click.option("--lexicon", type=EXISTING_FILE, required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@_handle_errors
def sentiment(in_dir, lexicon, out):
    """Daily headline count and sentiment indicators."""
    calendar = TradingCalendar.from_prices(parse_prices(Path(in_dir) / INGEST_FILES['prices']))
    buckets = read_buckets(in_dir, calendar)
    write_csv(news_to_frame(build_news_series(buckets.buckets, load_lexicon(lexicon), calendar)), out)


@cli.command()
@click.option("--y", "y_ref", required=True, help="FILE:COLUMN of the response")
@click.option("--x1", "x1_ref", required=True, help="FILE:COLUMN of the first regressor")
@click.option("--x2", "x2_ref", required=True, help="FILE:COLUMN of the second regressor")
@click.option("--category", default=None, help="Investor category for files holding several")
@click.option("--boot", type=int, default=None, help="Bootstrap replicates")
@click.option("--seed", type=int, default=None)
@click.option("--level", type=float, default=None, help="Confidence level")
@click.option("--shuffles", type=int, default=DEFAULT_SHUFFLES, show_default=True,
              help="Shuffles for the correlation null (0 skips it)")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.pass_obj
@_handle_errors
def regress(settings, y_ref, x1_ref, x2_ref, category, boot, seed, level, shuffles, out):
    """Standardized two-regressor fit with partial correlations and intervals."""
    y, x1, x2 = (load_column(ref, category) for ref in (y_ref, x1_ref, x2_ref))
    triple = AlignedTriple.from_series(y, x1, x2)
    report = fit_regression(
        triple,
        replicates=settings.bootstrap_replicates if boot is None else boot,
        seed=settings.seed if seed is None else seed,
        level=settings.ci_level if level is None else level,
        category=category,
        n_shuffles=shuffles,
    )
    write_json(report.to_dict(), out)


@cli.command()
@click.option("--config", "config_path", type=EXISTING_FILE, default=None, help="SynthConfig JSON")
@click.option("--seed", type=int, default=None, help="Override the config seed")
@click.option("--out", type=click.Path(file_okay=False), required=True)
@_handle_errors
def synth(config_path, seed, out):
    """Generate a seeded synthetic market in the ingest formats."""
    config = SynthConfig.from_json(config_path) if config_path else SynthConfig()
    if seed is not None:
        config = SynthConfig.from_dict({**config.to_dict(), "seed": seed})
    generate_market_files(config, out)


@cli.command()
@click.option("--synth-config", type=EXISTING_FILE, default=None, help="Generate the inputs from this SynthConfig")
@click.option("--transactions", type=EXISTING_FILE, default=None)
@click.option("--prices", type=EXISTING_FILE, default=None)
@click.option("--headlines", type=EXISTING_FILE, default=None)
@click.option("--lexicon", type=EXISTING_FILE, default=None)
@click.option("--assume-local-tz", "offset_rules", type=EXISTING_FILE, default=None)
@click.option("--drop-last-minutes", type=int, default=None)
@click.option("--theta", type=float, default=None)
@click.option("--boot", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--shuffles", type=int, default=DEFAULT_SHUFFLES, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.pass_obj
@_handle_errors
def pipeline(settings, synth_config, transactions, prices, headlines, lexicon, offset_rules,
             drop_last_minutes, theta, boot, seed, shuffles, out):
    """Run ingest, classify, marketvars, sentiment and all regressions."""
    if synth_config:
        paths = generate_market_files(SynthConfig.from_json(synth_config), Path(out) / "synth")
        transactions, prices, headlines = paths['transactions'], paths['prices'], paths['headlines']
        lexicon = lexicon or paths['lexicon']
    elif not all((transactions, prices, headlines, lexicon)):
        raise ValueError("Pass --synth-config, or all of --transactions, --prices, --headlines and --lexicon")

    run_pipeline(
        transactions, prices, headlines, lexicon, out,
        theta=settings.theta if theta is None else theta,
        drop_last_minutes=settings.drop_last_minutes if drop_last_minutes is None else drop_last_minutes,
        replicates=settings.bootstrap_replicates if boot is None else boot,
        seed=settings.seed if seed is None else seed,
        level=settings.ci_level,
        offset_rules_path=offset_rules,
        n_shuffles=shuffles,
    )


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def _format_option(func):
    return click.option("--format", "fmt", type=click.Choice(FORMATS), default="text", show_default=True)(func)


def _out_option(func):
    return click.option("--out", type=click.Path(dir_okay=False), default=None, help="Output file (default stdout)")(func)


@cli.group()
def report():
    """Summary, histogram, regression, dataset and autocorrelation tables."""


@report.command()
@click.option("--in", "in_dir", type=EXISTING_DIR, required=True, help="Directory with flows.csv, market.csv, news.csv")
@_format_option
@_out_option
@_handle_errors
def summary(in_dir, fmt, out):
    """Summary statistics per variable and category."""
    _emit(render_table(panel_summary(*read_daily_frames(in_dir)), fmt), out)


@report.command()
@click.option("--in", "source", type=click.Path(exists=True), required=True,
              help="Ingest directory or a deduplicated headline file")
@click.option("--bin-minutes", type=int, default=30, show_default=True)
@click.option("--n-days", type=int, default=None, help="Days in the sample (default: distinct headline dates)")
@_format_option
@_out_option
@_handle_errors
def histogram(source, bin_minutes, n_days, fmt, out):
    """Average intraday headline arrival rate over the whole day."""
    path = Path(source)
    if path.is_dir():
        path = path / INGEST_FILES['headlines_all']
    hist = intraday_histogram(parse_headlines(path), bin_minutes, n_days)
    _emit(render_table(hist.to_frame(), fmt), out)


@report.command()
@click.option("--in", "source", type=EXISTING_FILE, required=True, help="Report JSON from regress or pipeline")
@_format_option
@_out_option
@_handle_errors
def regressions(source, fmt, out):
    """Regression table: coefficients, intervals, residual variance, partial correlations."""
    data = json.loads(Path(source).read_text(encoding="utf-8"))
    reports = [data] if isinstance(data, dict) else data
    _emit(render_table(regression_table(reports), fmt), out)


@report.command()
@click.option("--in", "in_dir", type=EXISTING_DIR, required=True, help="Ingest output directory")
@click.option("--theta", type=float, default=None)
@_format_option
@_out_option
@click.pass_obj
@_handle_errors
def dataset(settings, in_dir, theta, fmt, out):
    """Investors, active investor-days and volume per category."""
    result = read_ingest(in_dir)
    _emit(render_table(dataset_table(result.transactions, settings.theta if theta is None else theta), fmt), out)


@report.command()
@click.option("--in", "ref", required=True, help="FILE:COLUMN of the series")
@click.option("--category", default=None)
@click.option("--max-lag", type=int, default=40, show_default=True)
@_format_option
@_out_option
@_handle_errors
def acf(ref, category, max_lag, fmt, out):
    """Autocorrelation with 2-sigma significance flags."""
    table = acf_table(load_column(ref, category).sort_index(), max_lag)
    run = table.attrs['significant_run']
    logger.info(f"📊 {run} consecutive significant lags from lag 1")
    text = render_table(table, fmt)
    if fmt == "text":
        text += f"significant lag run: {run}\n"
    _emit(text, out)


if __name__ == "__main__":
    cli()
