"""
Seeded synthetic market
Generates factor triples with known regression coefficients and full market
files (transactions, prices, headlines, lexicon) in the ingest formats
"""
import json
import math
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger
from scipy import linalg

from common import DEFAULT_SEED, DEFAULT_THETA, DEFAULT_TRANSACTION_SCHEMA, TRADING_WINDOW
from utils.ingest import HeadlineRecord, InvestorCategory, TradingCalendar, headlines_to_jsonl
from utils.sentiment import PolarityLexicon, write_lexicon
from utils.stats import AlignedTriple

DEFAULT_INVESTORS = {
    'Companies': 150,
    'Financial': 30,
    'Governmental': 15,
    'NonProfit': 15,
    'Households': 760,
    'Foreign': 30,
}

DEFAULT_POSITIVE_WORDS = (
    "gain", "growth", "strong", "rise", "profit", "beat", "upgrade", "record", "boost", "success",
)
DEFAULT_NEGATIVE_WORDS = (
    "loss", "weak", "fall", "cut", "downgrade", "decline", "warning", "lawsuit", "miss", "drop",
)
DEFAULT_FILLER_WORDS = (
    "nokia", "shares", "quarter", "market", "phone", "sales", "europe", "outlook", "network",
    "deal", "report", "unit", "handset", "helsinki", "analysts", "results",
)

# (response, first regressor, second regressor) of each generated triple
TRIPLE_NAMES = {
    'activity': ("n_total", "h", "vol"),
    'imbalance': ("imbalance_abs", "s_abs", "ret"),
}

_FEASIBILITY_TOL = 1e-12


class InfeasibleConfigError(ValueError):
    pass


@dataclass
class SynthConfig:
    """
    Synthetic-market parameters.

    activity_alpha and imbalance_alpha are the standardized coefficients of the
    two generated regressions: (H, Vol) for activity and (S_A, Ret) for
    imbalance. In the market simulation they are the loadings of the activity
    and buy-direction logits on the corresponding latent factors.
    """
    n_days: int = 1510
    start_date: str = "2003-01-02"
    seed: int = DEFAULT_SEED
    theta: float = DEFAULT_THETA
    investors: dict = field(default_factory=lambda: dict(DEFAULT_INVESTORS))

    activity_alpha: tuple = (0.226, 0.627)
    news_vol_rho: float = 0.501
    imbalance_alpha: tuple = (0.1, -0.6)
    sentiment_return_rho: float = 0.2
    beta_sq_true: float | None = None  # activity regression; must agree with the implied value
    exact_moments: bool = False

    base_activity_logit: float = -2.0
    investor_spread: float = 0.5
    buysell_prob: float = 0.08
    partial_fill_prob: float = 0.3
    zero_row_prob: float = 0.01

    initial_price: float = 100.0
    return_sd: float = 0.0234
    vol_level: float = 0.0207
    vol_spread: float = 0.35

    headline_rate: float = 3.7
    headline_spread: float = 0.5
    weekend_headline_rate: float = 0.3
    duplicate_prob: float = 0.25
    off_hours_share: float = 0.15
    words_per_headline: int = 7
    good_word_rate: float = 0.6
    bad_word_rate: float = 0.6
    sentiment_word_loading: float = 0.5
    positive_words: tuple = DEFAULT_POSITIVE_WORDS
    negative_words: tuple = DEFAULT_NEGATIVE_WORDS
    filler_words: tuple = DEFAULT_FILLER_WORDS

    def __post_init__(self):
        self.activity_alpha = tuple(float(a) for a in self.activity_alpha)
        self.imbalance_alpha = tuple(float(a) for a in self.imbalance_alpha)
        self.positive_words = tuple(self.positive_words)
        self.negative_words = tuple(self.negative_words)
        self.filler_words = tuple(self.filler_words)
        self._validate()

    def _validate(self):
        if self.n_days < 5:
            raise InfeasibleConfigError(f"n_days must be at least 5, got {self.n_days}")
        if not 0 < self.theta < 1:
            raise InfeasibleConfigError(f"theta must lie in (0, 1), got {self.theta}")

        investors = {}
        for token, count in self.investors.items():
            category = InvestorCategory.from_token(token)
            if int(count) != count or count < 0:
                raise InfeasibleConfigError(f"Investor count for {category.value} must be a non-negative integer")
            investors[category.value] = int(count)
        self.investors = investors

        for which in TRIPLE_NAMES:
            alpha, rho = self.regression(which)
            if len(alpha) != 2:
                raise InfeasibleConfigError(f"{which} coefficients must be a pair, got {alpha}")
            if not abs(rho) < 1:
                raise InfeasibleConfigError(f"{which} regressor correlation must lie in (-1, 1), got {rho}")
            explained = alpha[0] ** 2 + alpha[1] ** 2 + 2 * alpha[0] * alpha[1] * rho
            if explained > 1 + _FEASIBILITY_TOL:
                raise InfeasibleConfigError(
                    f"{which}: a1^2 + a2^2 + 2 a1 a2 rho12 = {explained:.6f} > 1 leaves negative residual variance"
                )

        if self.beta_sq_true is not None:
            implied = self.implied_beta_sq("activity")
            if abs(self.beta_sq_true - implied) > 1e-9:
                raise InfeasibleConfigError(
                    f"beta_sq_true={self.beta_sq_true} disagrees with {implied:.10f} implied by the activity coefficients"
                )

        for name in ("buysell_prob", "partial_fill_prob", "zero_row_prob", "duplicate_prob"):
            if not 0 <= getattr(self, name) <= 1:
                raise InfeasibleConfigError(f"{name} must lie in [0, 1]")
        for name in ("headline_rate", "weekend_headline_rate", "off_hours_share", "good_word_rate", "bad_word_rate"):
            if getattr(self, name) < 0:
                raise InfeasibleConfigError(f"{name} must be non-negative")
        if min(self.initial_price, self.vol_level) <= 0:
            raise InfeasibleConfigError("initial_price and vol_level must be positive")

        words = self.positive_words + self.negative_words + self.filler_words
        if not all(w.isalpha() for w in words):
            raise InfeasibleConfigError("Generator words must be purely alphabetic")
        if not self.positive_words or not self.negative_words or not self.filler_words:
            raise InfeasibleConfigError("Positive, negative and filler word lists must be non-empty")
        filler = {w.upper() for w in self.filler_words}
        lexicon = self.lexicon()
        if filler & (lexicon.positive | lexicon.negative):
            raise InfeasibleConfigError("Filler words must not appear in the lexicon")

    def regression(self, which):
        if which == "activity":
            return self.activity_alpha, self.news_vol_rho
        if which == "imbalance":
            return self.imbalance_alpha, self.sentiment_return_rho
        raise ValueError(f"Unknown regression {which!r}; expected one of {list(TRIPLE_NAMES)}")

    def implied_beta_sq(self, which="activity"):
        """Residual variance fraction 1 - a1^2 - a2^2 - 2 a1 a2 rho12."""
        (a1, a2), rho = self.regression(which)
        return max(0.0, 1.0 - a1 ** 2 - a2 ** 2 - 2 * a1 * a2 * rho)

    def lexicon(self):
        return PolarityLexicon.from_words(self.positive_words, self.negative_words)

    def calendar(self):
        days = pd.bdate_range(self.start_date, periods=self.n_days)
        return TradingCalendar(tuple(d.date() for d in days))

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"Unknown synth config key(s): {unknown}")
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise ValueError("Synth config must be a JSON object")
        return cls.from_dict(data)


@dataclass
class SyntheticMarket:
    calendar: TradingCalendar
    transactions: pd.DataFrame  # raw transaction-file layout
    prices: pd.DataFrame
    headlines: list
    lexicon: PolarityLexicon
    factors: pd.DataFrame


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _latent_pair(rng, T, rho, exact=False):
    """
    Two unit-variance regressors with correlation rho and an independent unit
    noise column. With exact=True the sample moments are exact: zero means,
    unit population variances, correlation rho and noise orthogonal to both.
    """
    z = rng.standard_normal((T, 3))
    if exact:
        z = z - z.mean(axis=0)
        whitening = np.linalg.cholesky(z.T @ z / T)
        z = linalg.solve_triangular(whitening, z.T, lower=True).T
    mixing = np.linalg.cholesky(np.array([[1.0, rho], [rho, 1.0]]))
    x = z[:, :2] @ mixing.T
    return x[:, 0], x[:, 1], z[:, 2]


def generate_factor_triple(config, which="activity"):
    """
    Draw y = a1 x1 + a2 x2 + beta eps with known coefficients.

    Args:
        config (SynthConfig): n_days sets T; the coefficients and regressor
            correlation come from the chosen regression
        which (str): "activity" or "imbalance"

    Returns:
        AlignedTriple: named after the pipeline variables of that regression
    """
    alpha, rho = config.regression(which)
    rng = np.random.default_rng(config.seed)
    x1, x2, eps = _latent_pair(rng, config.n_days, rho, config.exact_moments)
    beta = math.sqrt(config.implied_beta_sq(which))
    y = alpha[0] * x1 + alpha[1] * x2 + beta * eps
    return AlignedTriple(y, x1, x2, names=TRIPLE_NAMES[which])


def _alpha_tag(serial):
    letters = ""
    while True:
        serial, r = divmod(serial, 26)
        letters = chr(ord("a") + r) + letters
        if serial == 0:
            return "ref" + letters


def _headline_text(rng, config, good_mean, bad_mean, serial):
    n_good = int(rng.poisson(good_mean))
    n_bad = int(rng.poisson(bad_mean))
    n_filler = max(1, config.words_per_headline - n_good - n_bad)
    words = (
        [str(w) for w in rng.choice(config.positive_words, size=n_good)]
        + [str(w) for w in rng.choice(config.negative_words, size=n_bad)]
        + [str(w) for w in rng.choice(config.filler_words, size=n_filler)]
        + [_alpha_tag(serial)]
    )
    order = rng.permutation(len(words))
    return " ".join(words[i] for i in order).lower().capitalize()


def _simulate_transactions(rng, config, days, factors):
    T = len(days)
    day_strings = np.array([d.isoformat() for d in days])
    a_h, a_vol = config.activity_alpha
    b_s, b_ret = config.imbalance_alpha
    columns = DEFAULT_TRANSACTION_SCHEMA

    frames = []
    for name, count in config.investors.items():
        if count == 0:
            continue
        ids = np.array([f"{name[:3].upper()}{j:05d}" for j in range(count)])
        offsets = rng.normal(0.0, config.investor_spread, size=count)

        logit = config.base_activity_logit + offsets[None, :] + a_h * factors['z_h'][:, None] + a_vol * factors['z_vol'][:, None]
        active = rng.random((T, count)) < _sigmoid(logit)
        buys = rng.random((T, count)) < _sigmoid(b_s * factors['z_s'][:, None] + b_ret * factors['z_ret'][:, None])
        round_trip = rng.random((T, count)) < config.buysell_prob
        partial = rng.random((T, count)) < config.partial_fill_prob
        lots = rng.integers(1, 51, size=(T, count)) * 100
        zero_rows = ~active & (rng.random((T, count)) < config.zero_row_prob)

        # q = 0 for round trips, q = 0.6 for partial one-sided fills
        minor = np.where(partial, lots // 4, 0)
        bought = np.where(round_trip | buys, lots, minor)
        sold = np.where(round_trip, lots, np.where(buys, minor, lots))
        bought = np.where(active, bought, 0)
        sold = np.where(active, sold, 0)

        t_idx, j_idx = np.nonzero(active | zero_rows)
        frames.append(pd.DataFrame({
            columns['investor_id']: ids[j_idx],
            columns['category']: name,
            columns['day']: day_strings[t_idx],
            columns['volume_bought']: bought[t_idx, j_idx],
            columns['volume_sold']: sold[t_idx, j_idx],
        }))

    if not frames:
        return pd.DataFrame(columns=list(columns.values()))
    df = pd.concat(frames, ignore_index=True)
    return df.sort_values([columns['day'], columns['investor_id']]).reset_index(drop=True)


def _simulate_prices(config, days, factors):
    ret = config.return_sd * factors['z_ret']
    ret[0] = 0.0
    close = config.initial_price * np.exp(np.cumsum(ret))
    vol = config.vol_level * np.exp(config.vol_spread * factors['z_vol'])
    # high/low centred on the close so that 2 (high - low) / (high + low) = vol
    return pd.DataFrame({
        'day': [d.isoformat() for d in days],
        'close': close,
        'high': close * (1 + vol / 2),
        'low': close * (1 - vol / 2),
    })


def _simulate_headlines(rng, config, days, factors):
    open_minute = TRADING_WINDOW['open_minute']
    close_minute = TRADING_WINDOW['close_minute']
    off_minutes = np.concatenate([np.arange(0, open_minute), np.arange(close_minute + 1, 24 * 60)])

    intensity = config.headline_rate * np.exp(
        config.headline_spread * factors['z_h'] - config.headline_spread ** 2 / 2
    )
    counts = rng.poisson(intensity)
    good_mean = config.good_word_rate * np.exp(config.sentiment_word_loading * factors['z_s'])
    bad_mean = config.bad_word_rate * np.exp(-config.sentiment_word_loading * factors['z_s'])

    records = []
    serial = 0

    def emit(midnight, minute, t):
        nonlocal serial
        ts = midnight + timedelta(minutes=int(minute), seconds=int(rng.integers(0, 60)))
        text = _headline_text(rng, config, good_mean[t], bad_mean[t], serial)
        serial += 1
        records.append(HeadlineRecord(ts, text))
        return ts, text

    for t, day in enumerate(days):
        midnight = datetime(day.year, day.month, day.day, tzinfo=timezone.utc)
        for _ in range(counts[t]):
            ts, text = emit(midnight, rng.integers(open_minute, close_minute + 1), t)
            if rng.random() < config.duplicate_prob:
                # re-release later the same day, sometimes with irregular spacing
                later = ts + timedelta(minutes=int(rng.integers(1, 181)))
                records.append(HeadlineRecord(later, text.replace(" ", "  ", 1)))

        for _ in range(rng.poisson(config.headline_rate * config.off_hours_share)):
            emit(midnight, rng.choice(off_minutes), t)

        if t + 1 < len(days):
            for gap in range(1, (days[t + 1] - day).days):
                closed = day + timedelta(days=gap)
                closed_midnight = datetime(closed.year, closed.month, closed.day, tzinfo=timezone.utc)
                for _ in range(rng.poisson(config.weekend_headline_rate)):
                    emit(closed_midnight, rng.integers(open_minute, close_minute + 1), t)

    return sorted(records, key=lambda h: (h.timestamp, h.text))


def simulate_market(config):
    """
    Simulate one synthetic market.

    Latent daily factors: (z_h, z_vol) with correlation news_vol_rho and
    (z_s, z_ret) with correlation sentiment_return_rho. Each investor-day is
    active with probability sigmoid(base + investor offset + a_h z_h + a_vol z_vol);
    an active investor buys with probability sigmoid(b_s z_s + b_ret z_ret),
    or round-trips with probability buysell_prob. Returns are return_sd * z_ret,
    Vol is vol_level * exp(vol_spread * z_vol), the headline count is Poisson
    with a log-intensity linear in z_h, and positive/negative word counts tilt
    with z_s.

    Returns:
        SyntheticMarket: deterministic for a given config
    """
    rng = np.random.default_rng(config.seed)
    calendar = config.calendar()
    days = list(calendar)
    T = len(days)

    z_h, z_vol, _ = _latent_pair(rng, T, config.news_vol_rho)
    z_s, z_ret, _ = _latent_pair(rng, T, config.sentiment_return_rho)
    factors = {"z_h": z_h, "z_vol": z_vol, "z_s": z_s, "z_ret": z_ret}

    transactions = _simulate_transactions(rng, config, days, factors)
    prices = _simulate_prices(config, days, factors)
    headlines = _simulate_headlines(rng, config, days, factors)

    logger.info(
        f"🎲 Simulated {T} days: {len(transactions)} transaction rows, {len(headlines)} headline releases"
    )
    return SyntheticMarket(
        calendar=calendar,
        transactions=transactions,
        prices=prices,
        headlines=headlines,
        lexicon=config.lexicon(),
        factors=pd.DataFrame({"day": [d.isoformat() for d in days], **factors}),
    )


def generate_market_files(config, out_dir):
    """
    Write a synthetic market in the ingest formats.

    Returns:
        dict: transactions, prices, headlines, lexicon and config paths;
            files are byte-identical for a given config
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    market = simulate_market(config)

    paths = {
        'transactions': out / "transactions.csv",
        'prices': out / "prices.csv",
        'headlines': out / "headlines.jsonl",
        'lexicon': out / "lexicon.txt",
        'config': out / "synth_config.json",
    }
    market.transactions.to_csv(paths['transactions'], index=False, lineterminator="\n")
    market.prices.to_csv(paths['prices'], index=False, float_format="%.6f", lineterminator="\n")
    paths['headlines'].write_text(headlines_to_jsonl(market.headlines), encoding="utf-8")
    write_lexicon(market.lexicon, paths['lexicon'])
    paths['config'].write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    logger.info(f"✅ Synthetic market written to {out}")
    return paths


if __name__ == "__main__":
    """Recover the activity coefficients from a noiseless exact-moment triple"""
    from utils.stats import ols2_closed_form

    config = SynthConfig(activity_alpha=(0.6, 0.8), news_vol_rho=0.0, exact_moments=True)
    a1, a2, beta_sq = ols2_closed_form(generate_factor_triple(config))
    print(f"a1={a1:.12f} a2={a2:.12f} beta^2={beta_sq:.2e}")
