"""
Trading-state classification
Turns per-investor daily volumes into B / S / BS states and aggregates them
into per-category daily counts and buyer-seller imbalances
"""
import math
from collections import defaultdict
from dataclasses import dataclass
from datetime import date
from enum import Enum
from fractions import Fraction

import pandas as pd

from common import DEFAULT_THETA
from utils.ingest import InvestorCategory

FLOW_COLUMNS = [
    "day", "category", "n_buy", "n_sell", "n_buysell", "n_total", "imbalance_abs", "imbalance_rel",
]


class TradingState(str, Enum):
    BUY = "B"
    SELL = "S"
    BUYSELL = "BS"
    INACTIVE = "-"


@dataclass(frozen=True)
class DailyCategoryFlow:
    """Counts of buying, selling and round-tripping investors of one category on one day.

    imbalance_rel is None when no investor of the category was active.
    """
    day: date
    category: InvestorCategory
    n_buy: int
    n_sell: int
    n_buysell: int

    @property
    def n_total(self):
        return self.n_buy + self.n_sell + self.n_buysell

    @property
    def imbalance_abs(self):
        return self.n_buy - self.n_sell

    @property
    def imbalance_rel(self):
        if self.n_total == 0:
            return None
        return self.imbalance_abs / self.n_total


def _check_theta(theta):
    if not 0 < theta < 1:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")


def classify_state(volume_bought, volume_sold, theta=DEFAULT_THETA):
    """
    Classify one investor-day from its bought and sold volume.

    q = (V_b - V_s) / (V_b + V_s); Buy when q > theta, Sell when q < -theta,
    BuySell otherwise; Inactive when both volumes are zero. Integer volumes are
    compared exactly (theta is read as the decimal it prints as), so q = theta
    is never mistaken for a Buy.

    Raises:
        ValueError: If a volume is negative or theta is outside (0, 1)
    """
    if volume_bought < 0 or volume_sold < 0:
        raise ValueError(f"Negative volume: bought={volume_bought}, sold={volume_sold}")
    _check_theta(theta)

    if volume_bought == 0 and volume_sold == 0:
        return TradingState.INACTIVE

    if isinstance(volume_bought, int) and isinstance(volume_sold, int):
        # q > theta  <=>  den * (V_b - V_s) > num * (V_b + V_s) for theta = num / den
        t = Fraction(repr(theta)) if isinstance(theta, float) else Fraction(theta)
        diff = t.denominator * (volume_bought - volume_sold)
        bound = t.numerator * (volume_bought + volume_sold)
        if diff > bound:
            return TradingState.BUY
        if diff < -bound:
            return TradingState.SELL
        return TradingState.BUYSELL

    q = (volume_bought - volume_sold) / (volume_bought + volume_sold)
    if q > theta:
        return TradingState.BUY
    if q < -theta:
        return TradingState.SELL
    return TradingState.BUYSELL


def _count_states(records, theta):
    counts = defaultdict(lambda: {TradingState.BUY: 0, TradingState.SELL: 0, TradingState.BUYSELL: 0})
    for r in records:
        state = classify_state(r.volume_bought, r.volume_sold, theta)
        bucket = counts[r.category]  # inactive investors still register the category
        if state is not TradingState.INACTIVE:
            bucket[state] += 1
    return counts


def aggregate_daily(records, theta=DEFAULT_THETA):
    """
    Aggregate one day's records into per-category flows.

    Args:
        records (list[TransactionRecord]): Records sharing the same day
        theta (float): Classification threshold

    Returns:
        list[DailyCategoryFlow]: One flow per category present in the records,
            in category order. A category whose investors were all inactive
            yields an n_total = 0 row.

    Raises:
        ValueError: If the records span more than one day
    """
    if not records:
        return []
    days = {r.day for r in records}
    if len(days) > 1:
        raise ValueError(f"aggregate_daily expects a single day, got {sorted(days)}")
    day = days.pop()

    counts = _count_states(records, theta)
    return [
        DailyCategoryFlow(
            day,
            category,
            counts[category][TradingState.BUY],
            counts[category][TradingState.SELL],
            counts[category][TradingState.BUYSELL],
        )
        for category in InvestorCategory
        if category in counts
    ]


def build_flow_series(records, calendar, theta=DEFAULT_THETA):
    """
    Build the dense (category, day) -> DailyCategoryFlow map over the calendar.

    Days without records, and categories absent on a day, get zero-count rows.

    Raises:
        ValueError: If a record is dated outside the calendar
    """
    by_day = defaultdict(list)
    for r in records:
        if r.day not in calendar:
            raise ValueError(f"Record for investor {r.investor_id} dated {r.day} lies outside the trading calendar")
        by_day[r.day].append(r)

    series = {}
    for day in calendar:
        present = {flow.category: flow for flow in aggregate_daily(by_day.get(day, []), theta)}
        for category in InvestorCategory:
            series[(category, day)] = present.get(category) or DailyCategoryFlow(day, category, 0, 0, 0)
    return series


def flows_to_frame(series):
    """
    Flatten a flow series into a DataFrame.

    Returns:
        pd.DataFrame: Columns FLOW_COLUMNS sorted by day, then category order;
            imbalance_rel is NaN when undefined
    """
    if not series:
        return pd.DataFrame(columns=FLOW_COLUMNS)

    order = {c: i for i, c in enumerate(InvestorCategory)}
    rows = []
    for flow in sorted(series.values(), key=lambda f: (f.day, order[f.category])):
        rel = flow.imbalance_rel
        rows.append({
            'day': flow.day.isoformat(),
            'category': flow.category.value,
            'n_buy': flow.n_buy,
            'n_sell': flow.n_sell,
            'n_buysell': flow.n_buysell,
            'n_total': flow.n_total,
            'imbalance_abs': flow.imbalance_abs,
            'imbalance_rel': math.nan if rel is None else rel,
        })
    return pd.DataFrame(rows, columns=FLOW_COLUMNS)


def frame_to_flows(df):
    """Inverse of flows_to_frame; derived columns are recomputed from the counts."""
    series = {}
    for row in df.itertuples(index=False):
        day = date.fromisoformat(str(row.day))
        category = InvestorCategory.from_token(row.category)
        series[(category, day)] = DailyCategoryFlow(day, category, int(row.n_buy), int(row.n_sell), int(row.n_buysell))
    return series


def category_totals(records, theta=DEFAULT_THETA):
    """
    Whole-period totals per category: distinct investors, active investor-days
    by state, and traded volume.

    Returns:
        pd.DataFrame: One row per category present, in category order
    """
    totals = defaultdict(lambda: {
        'investors': set(), 'active_days': 0, 'buy': 0, 'sell': 0, 'buysell': 0,
        'volume_bought': 0, 'volume_sold': 0,
    })
    for r in records:
        t = totals[r.category]
        t['investors'].add(r.investor_id)
        t['volume_bought'] += r.volume_bought
        t['volume_sold'] += r.volume_sold
        state = classify_state(r.volume_bought, r.volume_sold, theta)
        if state is TradingState.INACTIVE:
            continue
        t['active_days'] += 1
        t[{TradingState.BUY: "buy", TradingState.SELL: "sell", TradingState.BUYSELL: "buysell"}[state]] += 1

    columns = ["category", "investors", "active_days", "n_buy", "n_sell", "n_buysell", "volume_bought", "volume_sold"]
    rows = [
        {
            'category': category.value,
            'investors': len(totals[category]['investors']),
            'active_days': totals[category]['active_days'],
            'n_buy': totals[category]['buy'],
            'n_sell': totals[category]['sell'],
            'n_buysell': totals[category]['buysell'],
            'volume_bought': totals[category]['volume_bought'],
            'volume_sold': totals[category]['volume_sold'],
        }
        for category in InvestorCategory
        if category in totals
    ]
    return pd.DataFrame(rows, columns=columns)


if __name__ == "__main__":
    """Classify a few volume pairs"""
    print("Testing trading-state classification...\n")
    for vb, vs in [(100, 0), (0, 0), (101, 99), (50, 52), (10.5, 10.4)]:
        print(f"  V_b={vb:>5}  V_s={vs:>5}  -> {classify_state(vb, vs).name}")
