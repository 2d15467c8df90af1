"""
Configuration Module for ccoc

Manages settings read from the environment (and an optional .env file).
"""

import os
from pathlib import Path

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

PROJECT_ROOT = Path(__file__).parent.parent


def _env_float(key: str, default: float) -> float:
    return float(os.getenv(key, default))


def _env_int(key: str, default: int) -> int:
    return int(float(os.getenv(key, default)))


class Settings:
    """Application settings configuration."""

    # Application metadata
    APP_NAME = "ccoc"
    APP_VERSION = "0.1.0"

    PROJECT_ROOT = PROJECT_ROOT

    # Logging configuration
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
    LOG_DIR = Path(os.getenv("CCOC_LOG_DIR", "logs"))
    LOG_FILE_NAME = "ccoc.log"
    LOG_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}"

    # Reproducibility
    SEED = _env_int("CCOC_SEED", 0)

    # Synthesis / LP settings
    LAMBDA_MAX = _env_float("CCOC_LAMBDA_MAX", 1e7)
    LP_BACKEND = os.getenv("CCOC_LP_BACKEND", "auto").lower()
    DENSE_LIMIT = _env_int("CCOC_DENSE_LIMIT", 20_000_000)

    # Performance settings
    THREAD_POOL_SIZE = _env_int("CCOC_THREADS", 4)

    @classmethod
    def validate(cls) -> bool:
        """Validate critical settings."""
        if cls.LP_BACKEND not in ("auto", "simplex", "highs"):
            raise ValueError(f"CCOC_LP_BACKEND must be auto, simplex or highs, got '{cls.LP_BACKEND}'")
        if cls.LAMBDA_MAX <= 0:
            raise ValueError("CCOC_LAMBDA_MAX must be positive")
        if cls.THREAD_POOL_SIZE < 1:
            raise ValueError("CCOC_THREADS must be at least 1")
        if cls.DENSE_LIMIT < 0:
            raise ValueError("CCOC_DENSE_LIMIT must be non-negative")
        return True

    @property
    def log_file(self) -> Path:
        return self.LOG_DIR / self.LOG_FILE_NAME


# Singleton instance
settings = Settings()

# Validate settings on import
settings.validate()
