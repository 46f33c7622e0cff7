"""
Daily market variables: close-to-close log return and the high-low volatility proxy
"""
import math
from dataclasses import dataclass
from datetime import date

import numpy as np
import pandas as pd

MARKET_COLUMNS = ["day", "ret", "vol"]


@dataclass(frozen=True)
class DailyMarketVars:
    day: date
    ret: float | None  # None on the first calendar day
    vol: float


def compute_return(close_today, close_prev):
    """Natural-log return between two consecutive closes."""
    if close_today <= 0 or close_prev <= 0:
        raise ValueError(f"Prices must be positive, got {close_today} and {close_prev}")
    return float(np.log(close_today) - np.log(close_prev))


def compute_volatility(high, low):
    """
    High-low volatility proxy 2 (high - low) / (high + low).

    Raises:
        ValueError: If a price is non-positive or low exceeds high
    """
    if high <= 0 or low <= 0:
        raise ValueError(f"Prices must be positive, got high={high}, low={low}")
    if low > high:
        raise ValueError(f"Low {low} above high {high}")
    return 2.0 * (high - low) / (high + low)


def build_market_series(prices, calendar):
    """
    Compute Ret and Vol for every calendar day.

    Args:
        prices (list[PriceRecord]): One record per calendar day
        calendar (TradingCalendar): Trading days; returns link consecutive entries

    Returns:
        dict: day -> DailyMarketVars, first day with ret None

    Raises:
        ValueError: If a calendar day has no price
    """
    by_day = {p.day: p for p in prices}
    missing = [d for d in calendar if d not in by_day]
    if missing:
        raise ValueError(f"Missing price for {len(missing)} calendar day(s), first {missing[0]}")

    series = {}
    previous = None
    for day in calendar:
        price = by_day[day]
        ret = None if previous is None else compute_return(price.close, previous.close)
        series[day] = DailyMarketVars(day, ret, compute_volatility(price.high, price.low))
        previous = price
    return series


def market_to_frame(series):
    rows = [
        {"day": m.day.isoformat(), "ret": math.nan if m.ret is None else m.ret, "vol": m.vol}
        for m in sorted(series.values(), key=lambda m: m.day)
    ]
    return pd.DataFrame(rows, columns=MARKET_COLUMNS)


if __name__ == "__main__":
    print(f"Vol(110, 90) = {compute_volatility(110, 90):.4f}")
    print(f"Ret(90, 100) = {compute_return(90, 100):.5f}")
