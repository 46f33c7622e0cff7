"""
Runtime settings for the newsflow pipeline
Loads overrides from environment variables or a .env file
"""
import os
from dataclasses import dataclass

from dotenv import load_dotenv

from common import (
    DEFAULT_BOOTSTRAP_REPLICATES,
    DEFAULT_CI_LEVEL,
    DEFAULT_DROP_LAST_MINUTES,
    DEFAULT_SEED,
    DEFAULT_THETA,
)

# Load environment variables from .env file
load_dotenv()


@dataclass(frozen=True)
class Settings:
    theta: float = DEFAULT_THETA
    drop_last_minutes: int = DEFAULT_DROP_LAST_MINUTES
    bootstrap_replicates: int = DEFAULT_BOOTSTRAP_REPLICATES
    seed: int = DEFAULT_SEED
    ci_level: float = DEFAULT_CI_LEVEL
    log_level: str = "INFO"


def _read_env(name, cast, default):
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return cast(raw.strip())
    except ValueError:
        raise ValueError(f"Invalid value for {name}: {raw!r}")


def load_settings_from_env():
    """
    Load pipeline settings from environment variables.

    Returns:
        Settings: settings with NEWSFLOW_* overrides applied

    Raises:
        ValueError: If a variable is set but cannot be parsed or is out of range
    """
    settings = Settings(
        theta=_read_env("NEWSFLOW_THETA", float, DEFAULT_THETA),
        drop_last_minutes=_read_env("NEWSFLOW_DROP_LAST_MINUTES", int, DEFAULT_DROP_LAST_MINUTES),
        bootstrap_replicates=_read_env("NEWSFLOW_BOOTSTRAP_REPLICATES", int, DEFAULT_BOOTSTRAP_REPLICATES),
        seed=_read_env("NEWSFLOW_SEED", int, DEFAULT_SEED),
        ci_level=_read_env("NEWSFLOW_CI_LEVEL", float, DEFAULT_CI_LEVEL),
        log_level=_read_env("NEWSFLOW_LOG_LEVEL", str.upper, "INFO"),
    )

    if not 0 < settings.theta < 1:
        raise ValueError(f"NEWSFLOW_THETA must lie in (0, 1), got {settings.theta}")
    if not 0 <= settings.drop_last_minutes < 510:
        raise ValueError(f"NEWSFLOW_DROP_LAST_MINUTES must lie in [0, 510), got {settings.drop_last_minutes}")
    if settings.bootstrap_replicates < 1000:
        raise ValueError("NEWSFLOW_BOOTSTRAP_REPLICATES must be at least 1000")
    if not 0 < settings.ci_level < 1:
        raise ValueError(f"NEWSFLOW_CI_LEVEL must lie in (0, 1), got {settings.ci_level}")

    return settings


if __name__ == "__main__":
    """Show the effective settings"""
    print(load_settings_from_env())
