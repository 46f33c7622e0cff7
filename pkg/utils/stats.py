"""
Regression and partial-correlation engine
Standardized two-regressor OLS in closed form, partial correlations and the
identity linking the two, Gaussian and bootstrap confidence intervals,
autocorrelation with 2-sigma bands, and shuffled-series correlation nulls
"""
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd
from loguru import logger
from scipy import linalg
from scipy import stats as sps
from statsmodels.tsa.stattools import acf as sm_acf

from common import DEFAULT_BOOTSTRAP_REPLICATES, DEFAULT_CI_LEVEL, DEFAULT_SEED, DEFAULT_SHUFFLES

COLLINEARITY_TOL = 1e-12
DUALITY_TOL = 1e-10
MAX_REDRAWS = 100
MIN_REPLICATES = 1000


class DegenerateSeriesError(ValueError):
    pass


class CollinearityError(ValueError):
    pass


class DegenerateCorrelationError(ValueError):
    pass


class DualityGuardError(ValueError):
    pass


@dataclass(frozen=True)
class ConfidenceInterval:
    low: float
    high: float

    @property
    def width(self):
        return self.high - self.low

    def contains(self, value):
        return self.low <= value <= self.high

    def to_list(self):
        return [self.low, self.high]


@dataclass(frozen=True)
class AlignedTriple:
    """Synchronously sampled response y and regressors x1, x2, free of undefined values."""
    y: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    dropped: int = 0
    names: tuple = ("y", "x1", "x2")

    def __post_init__(self):
        arrays = [np.asarray(a, dtype=float) for a in (self.y, self.x1, self.x2)]
        lengths = {len(a) for a in arrays}
        if len(lengths) != 1:
            raise ValueError(f"Series lengths differ: {[len(a) for a in arrays]}")
        if lengths.pop() < 3:
            raise ValueError("At least 3 aligned observations are required")
        if not all(np.isfinite(a).all() for a in arrays):
            raise ValueError("Aligned series contain undefined values")
        for name, a in zip(("y", "x1", "x2"), arrays):
            object.__setattr__(self, name, a)

    @property
    def T(self):
        return len(self.y)

    @classmethod
    def from_series(cls, y, x1, x2, names=None):
        """
        Align three pandas Series on their index and drop every row where any
        of them is undefined (listwise deletion). The number of dropped rows
        is kept on the triple.
        """
        frame = pd.concat({"y": y, "x1": x1, "x2": x2}, axis=1).replace([np.inf, -np.inf], np.nan)
        clean = frame.dropna()
        dropped = len(frame) - len(clean)
        if dropped:
            logger.info(f"🧹 Dropped {dropped} of {len(frame)} rows with undefined values")
        names = names or (y.name or "y", x1.name or "x1", x2.name or "x2")
        return cls(clean['y'].to_numpy(), clean['x1'].to_numpy(), clean['x2'].to_numpy(), dropped, tuple(names))

    @classmethod
    def from_frame(cls, df, y, x1, x2):
        return cls.from_series(df[y], df[x1], df[x2], names=(y, x1, x2))


@dataclass(frozen=True)
class PermutationNull:
    mean: float
    std: float
    observed: float
    p_value: float
    n_shuffles: int

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class Ols2Fit:
    alpha1: float
    alpha2: float
    beta_sq: float  # |Gamma| / (1 - rho12^2)
    beta_sq_decomposition: float  # 1 - a1^2 - a2^2 - 2 a1 a2 rho12
    residual_variance: float  # mean squared residual of the standardized fit
    rho12: float
    rho1y: float
    rho2y: float

    def __iter__(self):
        return iter((self.alpha1, self.alpha2, self.beta_sq))


@dataclass
class RegressionReport:
    alpha1: float
    alpha2: float
    beta_sq: float
    rho12: float
    rho1y: float
    rho2y: float
    pc1: float
    pc2: float
    ci_gauss_1: ConfidenceInterval
    ci_gauss_2: ConfidenceInterval
    ci_boot_1: ConfidenceInterval
    ci_boot_2: ConfidenceInterval
    T: int
    dropped: int = 0
    beta_sq_decomposition: float = math.nan
    residual_variance: float = math.nan
    duality_discrepancy: float | None = None
    names: tuple = ("y", "x1", "x2")
    category: str | None = None
    ci_level: float = DEFAULT_CI_LEVEL
    replicates: int = DEFAULT_BOOTSTRAP_REPLICATES
    seed: int = DEFAULT_SEED
    null_1: PermutationNull | None = None  # shuffled y against x1
    null_2: PermutationNull | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        y, x1, x2 = self.names
        return {
            'category': self.category,
            'y': y,
            'x1': x1,
            'x2': x2,
            'T': self.T,
            'dropped': self.dropped,
            'alpha1': self.alpha1,
            'alpha2': self.alpha2,
            'beta_sq': self.beta_sq,
            'beta_sq_decomposition': self.beta_sq_decomposition,
            'residual_variance': self.residual_variance,
            'rho12': self.rho12,
            'rho1y': self.rho1y,
            'rho2y': self.rho2y,
            'pc1': self.pc1,
            'pc2': self.pc2,
            'ci_gauss_1': self.ci_gauss_1.to_list(),
            'ci_gauss_2': self.ci_gauss_2.to_list(),
            'ci_boot_1': self.ci_boot_1.to_list(),
            'ci_boot_2': self.ci_boot_2.to_list(),
            'ci_level': self.ci_level,
            'replicates': self.replicates,
            'seed': self.seed,
            'duality_discrepancy': self.duality_discrepancy,
            'null_1': self.null_1.to_dict() if self.null_1 else None,
            'null_2': self.null_2.to_dict() if self.null_2 else None,
            **self.extra,
        }


@dataclass(frozen=True)
class AcfPoint:
    lag: int
    acf: float
    significant: bool


# ---------------------------------------------------------------------------
# Moments and correlations
# ---------------------------------------------------------------------------

def standardize(series):
    """
    Zero mean, unit variance with the population (T) denominator.

    Raises:
        DegenerateSeriesError: If the series is constant
        ValueError: If fewer than 2 values are given
    """
    arr = np.asarray(series, dtype=float)
    if arr.ndim != 1 or len(arr) < 2:
        raise ValueError("standardize needs a 1-d series of length >= 2")
    sd = arr.std()
    if not sd > 0:
        raise DegenerateSeriesError("Series has zero variance")
    return (arr - arr.mean()) / sd


def pearson(x, y):
    """Product-moment correlation, computed as the mean product of z-scores."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y):
        raise ValueError(f"Series lengths differ: {len(x)} vs {len(y)}")
    r = float(np.mean(standardize(x) * standardize(y)))
    return min(1.0, max(-1.0, r))


def _standardized(triple):
    return standardize(triple.y), standardize(triple.x1), standardize(triple.x2)


def _pairwise(zy, z1, z2):
    return float(np.mean(z1 * z2)), float(np.mean(z1 * zy)), float(np.mean(z2 * zy))


# ---------------------------------------------------------------------------
# Regression and partial correlation
# ---------------------------------------------------------------------------

def ols2_closed_form(triple):
    """
    Fit y = a1 x1 + a2 x2 + beta eps on standardized series.

    a1 = (rho1y - rho2y rho12) / (1 - rho12^2), symmetrically for a2, and
    beta^2 = |Gamma| / (1 - rho12^2) with Gamma the 3x3 correlation matrix.

    Returns:
        Ols2Fit: unpacks as (alpha1, alpha2, beta_sq)

    Raises:
        CollinearityError: If |rho12| >= 1 - 1e-12
    """
    zy, z1, z2 = _standardized(triple)
    rho12, rho1y, rho2y = _pairwise(zy, z1, z2)
    if abs(rho12) >= 1 - COLLINEARITY_TOL:
        raise CollinearityError(f"Regressors are collinear (rho12={rho12:.15f})")

    denom = 1.0 - rho12 ** 2
    alpha1 = (rho1y - rho2y * rho12) / denom
    alpha2 = (rho2y - rho1y * rho12) / denom

    gamma = np.array([
        [1.0, rho12, rho1y],
        [rho12, 1.0, rho2y],
        [rho1y, rho2y, 1.0],
    ])
    beta_sq = max(0.0, float(np.linalg.det(gamma)) / denom)
    decomposition = 1.0 - alpha1 ** 2 - alpha2 ** 2 - 2.0 * alpha1 * alpha2 * rho12
    residuals = zy - alpha1 * z1 - alpha2 * z2

    return Ols2Fit(
        alpha1, alpha2, beta_sq, decomposition, float(np.mean(residuals ** 2)), rho12, rho1y, rho2y,
    )


def partial_correlations(triple):
    """
    Partial correlations rho(y, x1 | x2) and rho(y, x2 | x1).

    Raises:
        DegenerateCorrelationError: If any pairwise |rho| reaches 1
    """
    rho12, rho1y, rho2y = _pairwise(*_standardized(triple))
    for name, r in (("rho12", rho12), ("rho1y", rho1y), ("rho2y", rho2y)):
        if abs(r) >= 1 - COLLINEARITY_TOL:
            raise DegenerateCorrelationError(f"{name}={r} leaves no residual variation")

    pc1 = (rho1y - rho2y * rho12) / math.sqrt((1 - rho2y ** 2) * (1 - rho12 ** 2))
    pc2 = (rho2y - rho1y * rho12) / math.sqrt((1 - rho1y ** 2) * (1 - rho12 ** 2))
    return pc1, pc2


def residual_partial_correlation(y, x, z):
    """
    rho(y, x | z) as the correlation between the residuals of y and of x after
    a least-squares fit (with intercept) on z.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    design = np.column_stack([np.ones(len(y)), np.asarray(z, dtype=float)])
    beta_y = linalg.lstsq(design, y)[0]
    beta_x = linalg.lstsq(design, x)[0]
    return pearson(y - design @ beta_y, x - design @ beta_x)


def duality_check(report):
    """
    |a1/a2 - (pc1/pc2) sqrt((1 - rho2y^2) / (1 - rho1y^2))|, zero up to rounding.

    Raises:
        DualityGuardError: If alpha2 or pc2 is zero
    """
    if report.alpha2 == 0 or report.pc2 == 0:
        raise DualityGuardError("alpha2 and pc2 must be nonzero to compare coefficient and partial-correlation ratios")
    lhs = report.alpha1 / report.alpha2
    rhs = (report.pc1 / report.pc2) * math.sqrt((1 - report.rho2y ** 2) / (1 - report.rho1y ** 2))
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# Confidence intervals
# ---------------------------------------------------------------------------

def _tail_quantiles(level):
    if not 0 < level < 1:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    lower = (1 - level) / 2
    return lower, 1 - lower


def gaussian_ci(triple, level=DEFAULT_CI_LEVEL):
    """
    Normal-theory intervals a_k +/- z * SE_k for standardized coefficients.

    The OLS term s^2 (X'X)^-1 on the standardized design, s^2 = RSS / (T - 2),
    is corrected by the delta-method term a_k^2 (2 R^2 - 1 - rho_ky^2) / T for
    the sample standard deviations used to standardize the series. With one
    regressor the variance reduces to (1 - rho^2)^2 / T.

    Returns:
        tuple[ConfidenceInterval, ConfidenceInterval]: for alpha1 and alpha2
    """
    if triple.T <= 3:
        raise ValueError("Gaussian intervals need T > 3")
    lower, upper = _tail_quantiles(level)

    fit = ols2_closed_form(triple)
    zy, z1, z2 = _standardized(triple)
    design = np.column_stack([z1, z2])
    xtx = design.T @ design
    if abs(np.linalg.det(xtx)) <= COLLINEARITY_TOL * triple.T ** 2:
        raise CollinearityError("Design matrix is singular")

    alphas = np.array([fit.alpha1, fit.alpha2])
    residuals = zy - design @ alphas
    s2 = float(residuals @ residuals) / (triple.T - 2)
    r_sq = 1.0 - fit.residual_variance
    rho_y = np.array([fit.rho1y, fit.rho2y])
    var = np.diag(s2 * np.linalg.inv(xtx)) + alphas ** 2 * (2.0 * r_sq - 1.0 - rho_y ** 2) / triple.T
    se = np.sqrt(np.clip(var, 0.0, None))
    z = sps.norm.ppf(upper)

    return (
        ConfidenceInterval(fit.alpha1 - z * se[0], fit.alpha1 + z * se[0]),
        ConfidenceInterval(fit.alpha2 - z * se[1], fit.alpha2 + z * se[1]),
    )


def _zscore_rows(values):
    mean = values.mean(axis=1, keepdims=True)
    sd = values.std(axis=1, keepdims=True)
    ok = sd[:, 0] > 0
    return (values - mean) / np.where(sd > 0, sd, 1.0), ok


def _fit_rows(ys, x1s, x2s):
    """Closed-form fit of every row of a (B, T) resample block."""
    zy, ok_y = _zscore_rows(ys)
    z1, ok_1 = _zscore_rows(x1s)
    z2, ok_2 = _zscore_rows(x2s)
    rho12 = np.mean(z1 * z2, axis=1)
    rho1y = np.mean(z1 * zy, axis=1)
    rho2y = np.mean(z2 * zy, axis=1)

    ok = ok_y & ok_1 & ok_2 & (np.abs(rho12) < 1 - COLLINEARITY_TOL)
    denom = np.where(ok, 1.0 - rho12 ** 2, 1.0)
    alphas = np.column_stack([(rho1y - rho2y * rho12) / denom, (rho2y - rho1y * rho12) / denom])
    return alphas, ok


def bootstrap_alphas(triple, replicates=DEFAULT_BOOTSTRAP_REPLICATES, seed=DEFAULT_SEED, batch_size=1000):
    """
    Pairs-bootstrap draws of (alpha1, alpha2).

    Replicate i resamples T rows with replacement from its own generator
    np.random.default_rng(seed + i), re-standardizes and refits in closed form.
    A resample with a constant series or collinear regressors is redrawn from
    the same generator, at most 100 times. Batching does not change the draws.

    Returns:
        np.ndarray: shape (replicates, 2)
    """
    if replicates < MIN_REPLICATES:
        raise ValueError(f"At least {MIN_REPLICATES} bootstrap replicates are required, got {replicates}")

    T = triple.T
    draws = np.empty((replicates, 2))
    redraws = 0
    for start in range(0, replicates, batch_size):
        stop = min(start + batch_size, replicates)
        rngs = [np.random.default_rng(seed + i) for i in range(start, stop)]
        idx = np.stack([rng.integers(0, T, size=T) for rng in rngs])
        alphas, ok = _fit_rows(triple.y[idx], triple.x1[idx], triple.x2[idx])

        attempts = 0
        bad = np.flatnonzero(~ok)
        while bad.size:
            if attempts == MAX_REDRAWS:
                raise DegenerateSeriesError(
                    f"Bootstrap replicate {start + int(bad[0])} stayed degenerate after {MAX_REDRAWS} redraws"
                )
            attempts += 1
            redraws += bad.size
            for b in bad:
                idx[b] = rngs[b].integers(0, T, size=T)
            sub_alphas, sub_ok = _fit_rows(triple.y[idx[bad]], triple.x1[idx[bad]], triple.x2[idx[bad]])
            alphas[bad] = sub_alphas
            bad = bad[~sub_ok]

        draws[start:stop] = alphas

    if redraws:
        logger.warning(f"⚠️ Redrew {redraws} degenerate bootstrap resamples")
    return draws


def bootstrap_ci(triple, replicates=DEFAULT_BOOTSTRAP_REPLICATES, seed=DEFAULT_SEED, level=DEFAULT_CI_LEVEL):
    """
    Percentile intervals from the pairs bootstrap (5th and 95th percentiles at level 0.90).

    Returns:
        tuple[ConfidenceInterval, ConfidenceInterval]: for alpha1 and alpha2;
            identical for identical inputs and seed
    """
    lower, upper = _tail_quantiles(level)
    draws = bootstrap_alphas(triple, replicates, seed)
    q = np.quantile(draws, [lower, upper], axis=0)
    return ConfidenceInterval(float(q[0, 0]), float(q[1, 0])), ConfidenceInterval(float(q[0, 1]), float(q[1, 1]))


def fit_regression(triple, replicates=DEFAULT_BOOTSTRAP_REPLICATES, seed=DEFAULT_SEED,
                   level=DEFAULT_CI_LEVEL, category=None, n_shuffles=DEFAULT_SHUFFLES):
    """
    Full regression report for one (response, regressor pair) fit.

    The shuffled-series nulls of the y-x1 and y-x2 correlations give the noise
    level to judge the correlations against; n_shuffles=0 skips them.

    Raises:
        ArithmeticError: If the coefficient / partial-correlation identity fails
            beyond rounding (1e-10, relative to the size of the ratio)
    """
    fit = ols2_closed_form(triple)
    pc1, pc2 = partial_correlations(triple)
    gauss_1, gauss_2 = gaussian_ci(triple, level)
    boot_1, boot_2 = bootstrap_ci(triple, replicates, seed, level)

    report = RegressionReport(
        alpha1=fit.alpha1,
        alpha2=fit.alpha2,
        beta_sq=fit.beta_sq,
        rho12=fit.rho12,
        rho1y=fit.rho1y,
        rho2y=fit.rho2y,
        pc1=pc1,
        pc2=pc2,
        ci_gauss_1=gauss_1,
        ci_gauss_2=gauss_2,
        ci_boot_1=boot_1,
        ci_boot_2=boot_2,
        T=triple.T,
        dropped=triple.dropped,
        beta_sq_decomposition=fit.beta_sq_decomposition,
        residual_variance=fit.residual_variance,
        names=triple.names,
        category=category,
        ci_level=level,
        replicates=replicates,
        seed=seed,
    )

    if n_shuffles:
        report.null_1 = permutation_null(triple.x1, triple.y, n_shuffles, seed)
        report.null_2 = permutation_null(triple.x2, triple.y, n_shuffles, seed + 1)

    try:
        discrepancy = duality_check(report)
    except DualityGuardError:
        logger.warning("⚠️ alpha2 or pc2 is zero; coefficient/partial-correlation identity not checked")
    else:
        scale = max(1.0, abs(report.alpha1 / report.alpha2))
        if discrepancy >= DUALITY_TOL * scale:
            raise ArithmeticError(f"Coefficient/partial-correlation identity violated by {discrepancy:.3e}")
        report.duality_discrepancy = discrepancy

    y, x1, x2 = triple.names
    label = f"[{category}] " if category else ""
    logger.info(
        f"📈 {label}{y} ~ {x1} + {x2}: a1={fit.alpha1:.4f}, a2={fit.alpha2:.4f}, "
        f"beta^2={fit.beta_sq:.4f}, T={triple.T}"
    )
    if report.null_1:
        logger.debug(f"🎲 Shuffled-correlation sd: {report.null_1.std:.4f} (x1), {report.null_2.std:.4f} (x2)")
    return report


# ---------------------------------------------------------------------------
# Time-series diagnostics
# ---------------------------------------------------------------------------

def autocorrelation(series, max_lag):
    """
    Sample autocorrelation for lags 0..max_lag, flagged where |acf| > 2 / sqrt(T).

    Raises:
        ValueError: If the series is not longer than max_lag + 2
        DegenerateSeriesError: If the series is constant
    """
    arr = np.asarray(series, dtype=float)
    T = len(arr)
    if max_lag < 0 or T <= max_lag + 2:
        raise ValueError(f"Series of length {T} is too short for max_lag={max_lag}")
    if not arr.std() > 0:
        raise DegenerateSeriesError("Series has zero variance")

    values = sm_acf(arr, nlags=max_lag, adjusted=False, fft=False)
    band = 2.0 / math.sqrt(T)
    return [AcfPoint(lag, float(v), bool(abs(v) > band)) for lag, v in enumerate(values)]


def significant_lag_run(points):
    """Number of consecutive 2-sigma significant lags starting at lag 1."""
    run = 0
    for point in points:
        if point.lag == 0:
            continue
        if not point.significant:
            break
        run += 1
    return run


def permutation_null(x, y, n_shuffles=1000, seed=DEFAULT_SEED):
    """
    Null distribution of the correlation under random shuffles of y.

    Returns:
        PermutationNull: mean and standard deviation of the shuffled
            correlations, the observed correlation and a two-sided
            permutation p-value
    """
    if len(x) != len(y):
        raise ValueError(f"Series lengths differ: {len(x)} vs {len(y)}")
    if n_shuffles < 2:
        raise ValueError("n_shuffles must be at least 2")

    zx = standardize(x)
    zy = standardize(y)
    rng = np.random.default_rng(seed)
    null = np.array([np.mean(zx * rng.permutation(zy)) for _ in range(n_shuffles)])
    observed = float(np.mean(zx * zy))
    p_value = (1 + int(np.sum(np.abs(null) >= abs(observed)))) / (n_shuffles + 1)

    return PermutationNull(float(null.mean()), float(null.std(ddof=1)), observed, p_value, n_shuffles)


if __name__ == "__main__":
    """Fit a synthetic triple"""
    rng = np.random.default_rng(0)
    x1 = rng.normal(size=500)
    x2 = 0.5 * x1 + rng.normal(size=500)
    y = 0.3 * x1 + 0.6 * x2 + rng.normal(size=500)
    triple = AlignedTriple(y, x1, x2)

    report = fit_regression(triple, replicates=1000, seed=1)
    for key, value in report.to_dict().items():
        print(f"  {key}: {value}")
