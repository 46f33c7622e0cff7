import math
from datetime import date, timedelta

import numpy as np
import pytest

from utils.ingest import PriceRecord, TradingCalendar
from utils.marketvars import build_market_series, compute_return, compute_volatility, market_to_frame


def price_path(closes, start=date(2003, 1, 2)):
    days = [start + timedelta(days=i) for i in range(len(closes))]
    prices = [PriceRecord(d, c, c * 1.01, c * 0.99) for d, c in zip(days, closes)]
    return prices, TradingCalendar(tuple(days))


@pytest.mark.parametrize("today, prev, expected", [
    (100, 100, 0.0),
    (math.e * 100, 100, 1.0),
    (90, 100, math.log(0.9)),
])
def test_compute_return(today, prev, expected):
    assert compute_return(today, prev) == pytest.approx(expected, abs=1e-12)


def test_return_rejects_non_positive():
    with pytest.raises(ValueError):
        compute_return(0, 100)


@pytest.mark.parametrize("high, low, expected", [(100, 100, 0.0), (110, 90, 0.2), (101, 99, 0.02)])
def test_compute_volatility(high, low, expected):
    assert compute_volatility(high, low) == pytest.approx(expected, abs=1e-15)


def test_volatility_errors():
    with pytest.raises(ValueError, match="above high"):
        compute_volatility(90, 110)
    with pytest.raises(ValueError, match="positive"):
        compute_volatility(10, 0)


def test_volatility_scale_invariant_and_bounded():
    rng = np.random.default_rng(3)
    for _ in range(200):
        low = rng.uniform(0.01, 100)
        high = low + rng.uniform(0, 1000)
        c = rng.uniform(0.1, 10)
        v = compute_volatility(high, low)
        assert 0 <= v < 2
        assert compute_volatility(c * high, c * low) == pytest.approx(v, rel=1e-12)


def test_one_day_calendar():
    prices, calendar = price_path([100.0])
    series = build_market_series(prices, calendar)
    assert len(series) == 1
    assert series[calendar.days[0]].ret is None
    assert math.isnan(market_to_frame(series)["ret"].iloc[0])


def test_constant_prices():
    days = [date(2003, 1, 2) + timedelta(days=i) for i in range(5)]
    prices = [PriceRecord(d, 50.0, 50.0, 50.0) for d in days]
    series = build_market_series(prices, TradingCalendar(tuple(days)))
    assert all(m.vol == 0 for m in series.values())
    assert all(m.ret == 0 for m in list(series.values())[1:])


def test_geometric_series():
    prices, calendar = price_path([100 * 1.01 ** t for t in range(30)])
    series = build_market_series(prices, calendar)
    for m in list(series.values())[1:]:
        assert m.ret == pytest.approx(math.log(1.01), abs=1e-12)


def test_returns_telescope():
    rng = np.random.default_rng(8)
    closes = 100 * np.exp(np.cumsum(rng.normal(0, 0.02, 500)))
    prices, calendar = price_path(list(closes))
    rets = [m.ret for m in build_market_series(prices, calendar).values()][1:]
    assert sum(rets) == pytest.approx(math.log(closes[-1] / closes[0]), abs=1e-12)


def test_missing_price_day():
    prices, _ = price_path([100.0, 101.0])
    calendar = TradingCalendar((prices[0].day, prices[1].day, prices[1].day + timedelta(days=1)))
    with pytest.raises(ValueError, match="Missing price"):
        build_market_series(prices, calendar)
