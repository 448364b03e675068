"""
Configuration management for Jahn-Teller Chain.
"""

import os
from pathlib import Path
from dataclasses import dataclass, field
from typing import Optional
from dotenv import load_dotenv


@dataclass
class Config:
    """Runtime configuration loaded from environment variables."""

    # Output
    output_dir: Path = field(default_factory=lambda: Path("results"))
    float_digits: int = 17

    # Sweep evaluation
    workers: int = 1

    # Physics thresholds
    validity_threshold: float = 0.1
    max_fock_cutoff: int = 40

    log_level: str = "INFO"

    @classmethod
    def from_env(cls, env_file: Optional[Path] = None) -> "Config":
        """Load configuration from environment variables."""
        if env_file:
            load_dotenv(env_file)
        else:
            load_dotenv()

        output_dir = Path(os.getenv("JT_OUTPUT_DIR", "results")).expanduser()

        float_digits = _int_from_env("JT_FLOAT_DIGITS", 17)
        if not 1 <= float_digits <= 17:
            raise ValueError("JT_FLOAT_DIGITS must lie between 1 and 17")

        workers = _int_from_env("JT_WORKERS", 1)
        if workers < 1:
            raise ValueError("JT_WORKERS must be a positive integer")

        validity_threshold = _float_from_env("JT_VALIDITY_THRESHOLD", 0.1)
        if validity_threshold <= 0:
            raise ValueError("JT_VALIDITY_THRESHOLD must be positive")

        max_fock_cutoff = _int_from_env("JT_MAX_FOCK_CUTOFF", 40)
        if max_fock_cutoff < 1:
            raise ValueError("JT_MAX_FOCK_CUTOFF must be at least 1")

        return cls(
            output_dir=output_dir,
            float_digits=float_digits,
            workers=workers,
            validity_threshold=validity_threshold,
            max_fock_cutoff=max_fock_cutoff,
            log_level=os.getenv("JT_LOG_LEVEL", "INFO").upper(),
        )


def _int_from_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}") from None


def _float_from_env(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"{name} must be a number, got {raw!r}") from None


# Global config instance (initialized in main)
_config: Optional[Config] = None


def get_config() -> Config:
    """Get the global configuration instance."""
    global _config
    if _config is None:
        _config = Config.from_env()
    return _config


def set_config(config: Config) -> None:
    """Set the global configuration instance."""
    global _config
    _config = config
