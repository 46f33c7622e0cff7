"""
Input parsing and validation
Reads transaction, price and headline files, deduplicates headlines,
applies the trading-hours window and buckets headlines on the trading calendar
"""
import io
import json
import math
import re
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from enum import Enum
from pathlib import Path

import pandas as pd
from loguru import logger

from common import DEFAULT_TRANSACTION_SCHEMA, INVESTOR_CATEGORIES, TRADING_WINDOW

# Column layout of the normalized transaction file written by the ingest step
NORMALIZED_TRANSACTION_SCHEMA = {
    'investor_id': 'investor_id',
    'category': 'category',
    'day': 'day',
    'volume_bought': 'volume_bought',
    'volume_sold': 'volume_sold',
}

PRICE_COLUMNS = ["day", "close", "high", "low"]


class IngestError(ValueError):
    """Validation failure in an input file, with the offending data row when known."""

    def __init__(self, message, row=None, field=None):
        self.row = row
        self.field = field
        prefix = f"row {row}: " if row is not None else ""
        super().__init__(prefix + message)


class InvestorCategory(str, Enum):
    COMPANIES = "Companies"
    FINANCIAL = "Financial"
    GOVERNMENTAL = "Governmental"
    NONPROFIT = "NonProfit"
    HOUSEHOLDS = "Households"
    FOREIGN = "Foreign"

    @classmethod
    def from_token(cls, token):
        """
        Map an input token (canonical name or a preset alias) to a category.

        Raises:
            ValueError: If the token names no known category
        """
        cleaned = " ".join(str(token).split())
        for name, preset in INVESTOR_CATEGORIES.items():
            if cleaned == name or cleaned in preset['aliases']:
                return cls(name)
        raise ValueError(f"Unknown investor category {token!r}")


@dataclass(frozen=True)
class TransactionRecord:
    investor_id: str
    category: InvestorCategory
    day: date
    volume_bought: int | float
    volume_sold: int | float

    def __post_init__(self):
        if self.volume_bought < 0 or self.volume_sold < 0:
            raise ValueError(
                f"Negative volume for investor {self.investor_id} on {self.day}: "
                f"bought={self.volume_bought}, sold={self.volume_sold}"
            )

    @property
    def is_active(self):
        return self.volume_bought > 0 or self.volume_sold > 0


@dataclass(frozen=True)
class PriceRecord:
    day: date
    close: float
    high: float
    low: float

    def __post_init__(self):
        if min(self.close, self.high, self.low) <= 0:
            raise ValueError(f"Non-positive price on {self.day}")
        if self.low > self.high:
            raise ValueError(f"Low {self.low} above high {self.high} on {self.day}")


@dataclass(frozen=True)
class HeadlineRecord:
    timestamp: datetime
    text: str

    def __post_init__(self):
        if self.timestamp.tzinfo is None:
            raise ValueError("Headline timestamp must be timezone-aware")
        # minute_of_day and day bucketing read the UTC wall clock
        object.__setattr__(self, "timestamp", self.timestamp.astimezone(timezone.utc))
        if not self.text or not self.text.strip():
            raise ValueError("Headline text is empty")

    @property
    def minute_of_day(self):
        return self.timestamp.hour * 60 + self.timestamp.minute


@dataclass(frozen=True)
class TradingCalendar:
    days: tuple

    def __post_init__(self):
        for prev, nxt in zip(self.days, self.days[1:]):
            if nxt <= prev:
                raise ValueError(f"Trading calendar is not strictly increasing at {prev} -> {nxt}")

    @classmethod
    def from_prices(cls, prices):
        return cls(tuple(sorted(p.day for p in prices)))

    def __len__(self):
        return len(self.days)

    def __iter__(self):
        return iter(self.days)

    def __contains__(self, day):
        return day in self._index

    def index_of(self, day):
        return self._index[day]

    @property
    def _index(self):
        # frozen dataclass: cache the lookup table on first use
        cached = self.__dict__.get('_cached_index')
        if cached is None:
            cached = {d: i for i, d in enumerate(self.days)}
            object.__setattr__(self, "_cached_index", cached)
        return cached


@dataclass
class HeadlineBuckets:
    buckets: dict = field(default_factory=dict)
    discarded: int = 0

    @property
    def total(self):
        return sum(len(v) for v in self.buckets.values())


@dataclass(frozen=True)
class OffsetRule:
    start: datetime
    end: datetime
    offset_minutes: int


@dataclass(frozen=True)
class OffsetRules:
    """Wall-clock intervals with a fixed UTC offset, e.g. the UK/US summer-time periods."""
    rules: tuple = ()
    default_offset_minutes: int = 0

    def offset_at(self, local):
        for rule in self.rules:
            if rule.start <= local < rule.end:
                return rule.offset_minutes
        return self.default_offset_minutes

    def to_utc(self, local):
        """Shift a naive local wall-clock time to an aware UTC datetime."""
        utc = local - timedelta(minutes=self.offset_at(local))
        return utc.replace(tzinfo=timezone.utc)


# ---------------------------------------------------------------------------
# Field parsing
# ---------------------------------------------------------------------------

def _is_missing(value):
    return value is None or (isinstance(value, float) and math.isnan(value)) or str(value).strip() == ""


def _parse_number(token, field_name, row):
    text = str(token).strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        value = float(text)
    except ValueError:
        raise IngestError(f"{field_name} is not a number: {text!r}", row=row, field=field_name)
    if not math.isfinite(value):
        raise IngestError(f"{field_name} is not finite: {text!r}", row=row, field=field_name)
    # integral volumes stay exact
    return int(value) if value.is_integer() else value


def _parse_day(token, row, field_name="day"):
    try:
        return date.fromisoformat(str(token).strip())
    except ValueError:
        raise IngestError(f"Invalid date {token!r} (expected YYYY-MM-DD)", row=row, field=field_name)


def _parse_timestamp(token, row, offset_rules=None):
    try:
        ts = pd.Timestamp(str(token).strip())
    except (ValueError, TypeError):
        raise IngestError(f"Invalid timestamp {token!r}", row=row, field="ts")
    if pd.isna(ts):
        raise IngestError(f"Invalid timestamp {token!r}", row=row, field="ts")
    if ts.tzinfo is not None:
        # explicit offsets win over local rules
        return ts.tz_convert("UTC").to_pydatetime()
    if offset_rules is not None:
        return offset_rules.to_utc(ts.to_pydatetime())
    return ts.tz_localize("UTC").to_pydatetime()


def _read_frame(stream, delimiter, what):
    try:
        return pd.read_csv(stream, sep=delimiter, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise IngestError(f"{what} file is empty (missing header row)")
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        # pandas counts the header as line 1
        row = int(match.group(1)) - 1 if match else None
        raise IngestError(f"Malformed {what} row: {e}", row=row)


def _require_columns(frame, columns, what):
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise IngestError(f"{what} header is missing column(s) {missing}; found {list(frame.columns)}")


# ---------------------------------------------------------------------------
# Parsers
# ---------------------------------------------------------------------------

def parse_transactions(stream, schema=None, delimiter=","):
    """
    Parse a delimiter-separated transaction file.

    Args:
        stream: Path or text stream with a header row
        schema (dict, optional): Record field -> column name overrides
            (keys: investor_id, category, day, volume_bought, volume_sold)
        delimiter (str): Field separator

    Returns:
        list[TransactionRecord]: Validated records in file order. Records with
            zero buy and sell volume are kept; they classify as inactive.

    Raises:
        IngestError: Malformed row, unknown category, negative volume or a
            duplicate (investor_id, day) key. The data row number is reported.
    """
    columns = {**DEFAULT_TRANSACTION_SCHEMA, **(schema or {})}
    frame = _read_frame(stream, delimiter, "transaction")
    _require_columns(frame, columns.values(), "Transaction")

    fields = list(columns.keys())
    records = []
    seen = {}
    for row, values in enumerate(frame[list(columns.values())].itertuples(index=False, name=None), start=1):
        raw = dict(zip(fields, values))
        for name, value in raw.items():
            if _is_missing(value):
                raise IngestError(f"Malformed row: missing {name}", row=row, field=name)

        try:
            category = InvestorCategory.from_token(raw['category'])
        except ValueError as e:
            raise IngestError(str(e), row=row, field="category")

        investor_id = str(raw['investor_id']).strip()
        day = _parse_day(raw['day'], row)
        bought = _parse_number(raw['volume_bought'], "volume_bought", row)
        sold = _parse_number(raw['volume_sold'], "volume_sold", row)

        try:
            record = TransactionRecord(investor_id, category, day, bought, sold)
        except ValueError as e:
            raise IngestError(str(e), row=row, field="volume")

        key = (investor_id, day)
        if key in seen:
            raise IngestError(
                f"Duplicate key (investor_id={investor_id}, day={day}); first seen in row {seen[key]}",
                row=row,
            )
        seen[key] = row
        records.append(record)

    inactive = sum(1 for r in records if not r.is_active)
    logger.info(f"📊 Parsed {len(records)} transaction rows ({inactive} inactive)")
    return records


def parse_prices(stream, delimiter=","):
    """
    Parse a price file with columns day, close, high, low.

    Returns:
        list[PriceRecord]: Records sorted by day

    Raises:
        IngestError: Malformed row, non-positive price, low above high or a repeated day
    """
    frame = _read_frame(stream, delimiter, "price")
    _require_columns(frame, PRICE_COLUMNS, "Price")

    records = []
    seen = {}
    for row, values in enumerate(frame[PRICE_COLUMNS].itertuples(index=False, name=None), start=1):
        raw = dict(zip(PRICE_COLUMNS, values))
        for name, value in raw.items():
            if _is_missing(value):
                raise IngestError(f"Malformed row: missing {name}", row=row, field=name)
        day = _parse_day(raw['day'], row)
        if day in seen:
            raise IngestError(f"Duplicate price day {day}; first seen in row {seen[day]}", row=row)
        seen[day] = row
        try:
            records.append(PriceRecord(
                day,
                float(_parse_number(raw['close'], "close", row)),
                float(_parse_number(raw['high'], "high", row)),
                float(_parse_number(raw['low'], "low", row)),
            ))
        except ValueError as e:
            if isinstance(e, IngestError):
                raise
            raise IngestError(str(e), row=row)

    records.sort(key=lambda p: p.day)
    logger.info(f"📊 Parsed {len(records)} price rows")
    return records


def _read_text(stream):
    if isinstance(stream, (str, Path)):
        return Path(stream).read_text(encoding="utf-8")
    return stream.read()


def parse_headlines(stream, fmt="auto", delimiter=",", offset_rules=None):
    """
    Parse headlines given as JSON lines ({"ts": RFC3339, "text": ...}) or as a
    delimited file with ts and text columns.

    Args:
        stream: Path or text stream
        fmt (str): "jsonl", "csv" or "auto" (JSON lines when the first
            non-blank line starts with "{")
        offset_rules (OffsetRules, optional): Read timestamps without an
            offset as local wall-clock times under these rules

    Returns:
        list[HeadlineRecord]: Records in file order with UTC timestamps
    """
    content = _read_text(stream)
    if fmt == "auto":
        first = next((line.strip() for line in content.splitlines() if line.strip()), "")
        fmt = "jsonl" if first.startswith("{") else "csv"

    rows = []
    if fmt == "jsonl":
        for row, line in enumerate(content.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise IngestError(f"Malformed JSON: {e}", row=row)
            if not isinstance(obj, dict) or "ts" not in obj or "text" not in obj:
                raise IngestError("Headline object needs 'ts' and 'text'", row=row)
            rows.append((row, obj['ts'], obj['text']))
    elif fmt == "csv":
        if not content.strip():
            return []
        frame = _read_frame(io.StringIO(content), delimiter, "headline")
        _require_columns(frame, ["ts", "text"], "Headline")
        for row, (ts, text) in enumerate(frame[["ts", "text"]].itertuples(index=False, name=None), start=1):
            rows.append((row, ts, text))
    else:
        raise ValueError(f"Unknown headline format {fmt!r}")

    records = []
    for row, ts, text in rows:
        if _is_missing(ts):
            raise IngestError("Malformed row: missing ts", row=row, field="ts")
        if not isinstance(text, str) or not text.strip():
            raise IngestError("Headline text is empty", row=row, field="text")
        records.append(HeadlineRecord(_parse_timestamp(ts, row, offset_rules), text))

    logger.info(f"📰 Parsed {len(records)} headlines ({fmt})")
    return records


def load_offset_rules(path):
    """
    Load fixed-offset local-time rules from JSON:
    {"default_offset_minutes": 0,
     "rules": [{"start": "2003-03-30T01:00", "end": "2003-10-26T01:00", "offset_minutes": 60}, ...]}

    start/end are local wall-clock times; intervals are half-open and must not overlap.
    """
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, list):
        data = {"rules": data}

    rules = []
    for i, item in enumerate(data.get('rules', []), start=1):
        try:
            rule = OffsetRule(
                datetime.fromisoformat(item['start']),
                datetime.fromisoformat(item['end']),
                int(item['offset_minutes']),
            )
        except (KeyError, ValueError, TypeError) as e:
            raise IngestError(f"Invalid offset rule: {e}", row=i)
        if rule.end <= rule.start:
            raise IngestError("Offset rule ends before it starts", row=i)
        rules.append(rule)

    rules.sort(key=lambda r: r.start)
    for prev, nxt in zip(rules, rules[1:]):
        if nxt.start < prev.end:
            raise IngestError(f"Offset rules overlap at {nxt.start}")

    return OffsetRules(tuple(rules), int(data.get('default_offset_minutes', 0)))


# ---------------------------------------------------------------------------
# Headline processing
# ---------------------------------------------------------------------------

def normalize_headline_text(text):
    """Trim and collapse internal whitespace; case is preserved."""
    return " ".join(text.split())


def dedupe_headlines(headlines):
    """
    Keep one record per distinct headline text, dated at its first release.

    Returns:
        list[HeadlineRecord]: One record per normalized text carrying the
            earliest timestamp, sorted by (timestamp, text)
    """
    earliest = {}
    for h in headlines:
        key = normalize_headline_text(h.text)
        current = earliest.get(key)
        if current is None or h.timestamp < current.timestamp:
            earliest[key] = HeadlineRecord(h.timestamp, key)

    result = sorted(earliest.values(), key=lambda h: (h.timestamp, h.text))
    removed = len(headlines) - len(result)
    if removed:
        logger.info(f"🧹 Removed {removed} repeated headline releases")
    return result


def filter_trading_hours(headlines, drop_last_minutes=0):
    """
    Keep headlines released inside the trading window.

    The window runs from 08:00 to (16:30 - drop_last_minutes) UTC, both
    bounds inclusive at minute granularity, so 16:30:59 is kept when
    drop_last_minutes is 0.

    Raises:
        ValueError: If drop_last_minutes is outside [0, 510)
    """
    open_minute = TRADING_WINDOW['open_minute']
    close_minute = TRADING_WINDOW['close_minute']
    if not 0 <= drop_last_minutes < close_minute - open_minute:
        raise ValueError(
            f"drop_last_minutes must lie in [0, {close_minute - open_minute}), got {drop_last_minutes}"
        )

    upper = close_minute - drop_last_minutes
    kept = [h for h in headlines if open_minute <= h.minute_of_day <= upper]
    logger.info(f"🕗 {len(kept)}/{len(headlines)} headlines inside the trading window")
    return kept


def bucket_headlines_by_day(headlines, calendar):
    """
    Assign each headline to its (UTC) trading day.

    Returns:
        HeadlineBuckets: day -> headlines for calendar days that received at
            least one headline, plus the number discarded on non-trading days
    """
    result = HeadlineBuckets()
    for h in headlines:
        day = h.timestamp.date()
        if day not in calendar:
            result.discarded += 1
            continue
        result.buckets.setdefault(day, []).append(h)

    if result.discarded:
        logger.warning(f"⚠️ Discarded {result.discarded} headlines released on non-trading days")
    return result


# ---------------------------------------------------------------------------
# Tabular conversion
# ---------------------------------------------------------------------------

def transactions_to_frame(records):
    columns = list(NORMALIZED_TRANSACTION_SCHEMA.values())
    if not records:
        return pd.DataFrame(columns=columns)
    df = pd.DataFrame([{
        'investor_id': r.investor_id,
        'category': r.category.value,
        'day': r.day.isoformat(),
        'volume_bought': r.volume_bought,
        'volume_sold': r.volume_sold,
    } for r in records], columns=columns)
    return df.sort_values(["day", "investor_id"]).reset_index(drop=True)


def prices_to_frame(prices):
    return pd.DataFrame(
        [{"day": p.day.isoformat(), "close": p.close, "high": p.high, "low": p.low} for p in prices],
        columns=PRICE_COLUMNS,
    )


def format_timestamp(ts):
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def headlines_to_jsonl(headlines):
    return "".join(
        json.dumps({"ts": format_timestamp(h.timestamp), "text": h.text}, ensure_ascii=False) + "\n"
        for h in headlines
    )


if __name__ == "__main__":
    """Parse a few inline rows"""
    print("1. Transactions:")
    sample = io.StringIO(
        "investor_id,category,date,buy_volume,sell_volume\n"
        "A1,Households,2003-01-02,100,0\n"
        "B7,Non profit,2003-01-02,40,40\n"
    )
    for record in parse_transactions(sample):
        print(f"  {record}")

    print("\n2. Headlines:")
    feed = io.StringIO(
        '{"ts": "2003-01-02T10:00:00Z", "text": "Nokia  raises outlook"}\n'
        '{"ts": "2003-01-02T11:00:00Z", "text": "Nokia raises outlook"}\n'
        '{"ts": "2003-01-02T17:45:00Z", "text": "Late wire"}\n'
    )
    unique = dedupe_headlines(parse_headlines(feed))
    for h in filter_trading_hours(unique):
        print(f"  {format_timestamp(h.timestamp)} {h.text}")
