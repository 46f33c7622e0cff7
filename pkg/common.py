# Preset configuration shared by the library and the CLI

# Investor categories in reporting order, with the tokens accepted in input files
INVESTOR_CATEGORIES = {
    "Companies": {"aliases": ["Companies", "Company"]},
    "Financial": {"aliases": ["Financial", "Financial institutions"]},
    "Governmental": {"aliases": ["Governmental", "Government"]},
    "NonProfit": {"aliases": ["NonProfit", "Non profit", "Non-profit"]},
    "Households": {"aliases": ["Households", "Household"]},
    "Foreign": {"aliases": ["Foreign"]},
}

# Headline window, minutes after midnight UTC (08:00 to 16:30 inclusive)
TRADING_WINDOW = {"open_minute": 8 * 60, "close_minute": 16 * 60 + 30}

DEFAULT_THETA = 0.01
DEFAULT_DROP_LAST_MINUTES = 0
DEFAULT_BOOTSTRAP_REPLICATES = 10_000
DEFAULT_SEED = 42
DEFAULT_CI_LEVEL = 0.90
DEFAULT_SHUFFLES = 1000
MIN_SENTIMENT_WORDS = 5

# Column names of the raw transaction file, keyed by record field
DEFAULT_TRANSACTION_SCHEMA = {
    "investor_id": "investor_id",
    "category": "category",
    "day": "date",
    "volume_bought": "buy_volume",
    "volume_sold": "sell_volume",
}

# The three regressions of the analysis: response vs (exogenous, endogenous) regressor
REGRESSION_PRESETS = {
    "activity": {"y": "n_total", "x1": "h", "x2": "vol"},
    "imbalance_abs": {"y": "imbalance_abs", "x1": "s_abs", "x2": "ret"},
    "imbalance_rel": {"y": "imbalance_rel", "x1": "s_rel", "x2": "ret"},
}
