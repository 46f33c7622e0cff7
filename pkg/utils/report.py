"""
Tables and histograms
Summary statistics, the intraday headline arrival rate, regression tables and
their text / CSV / JSON renderings
"""
import json
import math
from dataclasses import dataclass
from datetime import date

import numpy as np
import pandas as pd

from common import DEFAULT_THETA
from utils.classify import category_totals
from utils.ingest import InvestorCategory
from utils.stats import autocorrelation, significant_lag_run

SUMMARY_COLUMNS = ["variable", "category", "n", "min", "q05", "median", "q95", "max", "mean", "std"]

REGRESSION_COLUMNS = [
    "category", "y", "x1", "x2", "T",
    "alpha1", "ci_gauss_1_low", "ci_gauss_1_high", "ci_boot_1_low", "ci_boot_1_high",
    "alpha2", "ci_gauss_2_low", "ci_gauss_2_high", "ci_boot_2_low", "ci_boot_2_high",
    "residual_var_pct", "pc1", "pc2", "null_sd_1", "null_sd_2",
]

FORMATS = ("text", "csv", "json")

# Flow variables summarized per category, then the shared daily series
PANEL_FLOW_VARIABLES = ["n_total", "imbalance_abs", "imbalance_rel"]
PANEL_MARKET_VARIABLES = ["ret", "vol"]
PANEL_NEWS_VARIABLES = ["h", "s_abs", "s_rel"]


@dataclass(frozen=True)
class SummaryStats:
    variable: str
    category: str | None
    n: int
    min: float
    q05: float
    median: float
    q95: float
    max: float
    mean: float
    std: float


@dataclass(frozen=True)
class IntradayHistogram:
    bin_minutes: int
    n_days: int
    counts: np.ndarray

    @property
    def bin_starts(self):
        return np.arange(len(self.counts)) * self.bin_minutes

    @property
    def rates(self):
        """Headlines per minute per day in each bin."""
        return self.counts / (self.n_days * self.bin_minutes)

    def to_frame(self):
        starts = self.bin_starts
        return pd.DataFrame({
            'bin_start': [f"{m // 60:02d}:{m % 60:02d}" for m in starts],
            'start_minute': starts,
            'count': self.counts,
            'rate': self.rates,
        })


def nearest_rank(sorted_values, p):
    """Nearest-rank quantile: the value at rank ceil(p * n), 1-based."""
    n = len(sorted_values)
    if n == 0:
        raise ValueError("Quantile of an empty series")
    rank = max(1, math.ceil(round(p * n, 9)))
    return sorted_values[min(rank, n) - 1]


def summary_stats(values, variable, category=None):
    """
    Location and spread of one series. Undefined values are ignored;
    median and quantiles use the nearest-rank method; std uses n - 1.

    Raises:
        ValueError: If no defined value remains
    """
    arr = np.asarray(values, dtype=float)
    arr = np.sort(arr[~np.isnan(arr)])
    if len(arr) == 0:
        raise ValueError(f"No defined values for {variable}")
    return SummaryStats(
        variable=variable,
        category=category,
        n=len(arr),
        min=float(arr[0]),
        q05=float(nearest_rank(arr, 0.05)),
        median=float(nearest_rank(arr, 0.5)),
        q95=float(nearest_rank(arr, 0.95)),
        max=float(arr[-1]),
        mean=float(arr.mean()),
        std=float(arr.std(ddof=1)) if len(arr) > 1 else 0.0,
    )


def _stats_frame(stats):
    return pd.DataFrame([s.__dict__ for s in stats], columns=SUMMARY_COLUMNS)


def summary_table(series):
    """
    Args:
        series (dict): variable name -> values, or (variable, category) -> values

    Returns:
        pd.DataFrame: one SummaryStats row per entry, in input order
    """
    if not series:
        raise ValueError("summary_table needs at least one series")
    stats = []
    for key, values in series.items():
        variable, category = key if isinstance(key, tuple) else (key, None)
        stats.append(summary_stats(values, variable, category))
    return _stats_frame(stats)


def panel_summary(flows, market, news):
    """
    Summary statistics in the layout of the dataset overview: activity and
    imbalances per category, then returns, volatility and the news series.
    """
    series = {}
    for variable in PANEL_FLOW_VARIABLES:
        for category in InvestorCategory:
            values = flows.loc[flows['category'] == category.value, variable]
            if values.notna().any():
                series[(variable, category.value)] = values
    for variable in PANEL_MARKET_VARIABLES:
        series[variable] = market[variable]
    for variable in PANEL_NEWS_VARIABLES:
        series[variable] = news[variable]
    return summary_table(series)


def intraday_histogram(headlines, bin_minutes=30, n_days=None):
    """
    Average arrival rate of headlines by time of day (UTC).

    Args:
        headlines (list[HeadlineRecord]): Deduplicated headlines over the whole day
        bin_minutes (int): Bin width; must divide 1440
        n_days (int, optional): Days in the sample; defaults to the number of
            distinct dates among the headlines

    Returns:
        IntradayHistogram: rate = count / (n_days * bin_minutes)
    """
    if bin_minutes <= 0 or (24 * 60) % bin_minutes:
        raise ValueError(f"bin_minutes must divide 1440, got {bin_minutes}")
    if n_days is None:
        n_days = len({h.timestamp.date() for h in headlines})
    if n_days <= 0:
        raise ValueError("Histogram needs at least one day")

    counts = np.zeros((24 * 60) // bin_minutes, dtype=int)
    for h in headlines:
        counts[h.minute_of_day // bin_minutes] += 1
    return IntradayHistogram(bin_minutes, n_days, counts)


def _as_dict(report):
    return report.to_dict() if hasattr(report, "to_dict") else dict(report)


def regression_table(reports):
    """
    One row per fit: coefficients with both interval types, residual variance
    in percent (100 * beta^2), both partial correlations and the standard
    deviation of the shuffled-series correlations.
    """
    rows = []
    for report in reports:
        d = _as_dict(report)
        rows.append({
            'category': d.get('category'),
            'y': d['y'],
            'x1': d['x1'],
            'x2': d['x2'],
            'T': d['T'],
            'alpha1': d['alpha1'],
            'ci_gauss_1_low': d['ci_gauss_1'][0],
            'ci_gauss_1_high': d['ci_gauss_1'][1],
            'ci_boot_1_low': d['ci_boot_1'][0],
            'ci_boot_1_high': d['ci_boot_1'][1],
            'alpha2': d['alpha2'],
            'ci_gauss_2_low': d['ci_gauss_2'][0],
            'ci_gauss_2_high': d['ci_gauss_2'][1],
            'ci_boot_2_low': d['ci_boot_2'][0],
            'ci_boot_2_high': d['ci_boot_2'][1],
            'residual_var_pct': 100.0 * d['beta_sq'],
            'pc1': d['pc1'],
            'pc2': d['pc2'],
            'null_sd_1': (d.get('null_1') or {}).get('std'),
            'null_sd_2': (d.get('null_2') or {}).get('std'),
        })
    return pd.DataFrame(rows, columns=REGRESSION_COLUMNS)


def dataset_table(records, theta=DEFAULT_THETA):
    """Per-category investor counts, active investor-days by state and traded volume, plus a total row."""
    df = category_totals(records, theta)
    if df.empty:
        return df
    total = df.drop(columns="category").sum()
    total['category'] = "Total"
    return pd.concat([df, total.to_frame().T], ignore_index=True)[df.columns]


def acf_table(series, max_lag=40):
    """
    Autocorrelation listing with the 2-sigma band and significance flags.
    The length of the initial run of significant lags is stored in
    df.attrs['significant_run'].
    """
    values = np.asarray(series, dtype=float)
    values = values[~np.isnan(values)]
    points = autocorrelation(values, max_lag)
    df = pd.DataFrame({
        'lag': [p.lag for p in points],
        'acf': [p.acf for p in points],
        'significant': [p.significant for p in points],
    })
    df['band'] = 2.0 / math.sqrt(len(values))
    df.attrs['significant_run'] = significant_lag_run(points)
    return df


def _json_default(value):
    if hasattr(value, "item"):
        return value.item()
    if isinstance(value, date):
        return value.isoformat()
    raise TypeError(f"Cannot serialize {type(value).__name__}")


def _format_cell(value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (float, np.floating)):
        return f"{value:.6g}"
    return str(value)


def render_table(df, fmt="text"):
    """
    Render a table as aligned text (numbers to 6 significant digits), CSV, or
    JSON records (full precision, undefined values as null).
    """
    if fmt == "csv":
        return df.to_csv(index=False, lineterminator="\n")
    if fmt == "json":
        records = df.astype(object).where(df.notna(), None).to_dict(orient="records")
        return json.dumps(records, indent=2, default=_json_default) + "\n"
    if fmt != "text":
        raise ValueError(f"Unknown format {fmt!r}; expected one of {FORMATS}")

    columns = list(df.columns)
    cells = [[_format_cell(v) for v in row] for row in df.itertuples(index=False, name=None)]
    widths = [max([len(str(c))] + [len(r[i]) for r in cells]) for i, c in enumerate(columns)]
    lines = ["  ".join(str(c).rjust(w) for c, w in zip(columns, widths))]
    lines += ["  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in cells]
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    """Quantiles of 1..100"""
    print(render_table(summary_table({"x": range(1, 101)})))
