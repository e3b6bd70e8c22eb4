"""
Application settings using Pydantic Settings
"""

from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class BenchSettings(BaseSettings):
    """Application settings, read from ABOB_* environment variables or .env"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="ABOB_",
        case_sensitive=False,
        extra="ignore",
    )

    # Application Settings
    app_name: str = "ABoB Bench"
    app_version: str = "1.0.0"
    app_env: str = "development"
    log_level: str = "INFO"

    # Logging
    log_dir: str = "logs"
    log_to_file: bool = True

    # Experiment defaults
    workers: int = Field(default=1, ge=1)
    output_dir: str = "results"
    trajectory_max_rows: int = Field(default=10_000, ge=2)


@lru_cache()
def get_settings() -> BenchSettings:
    """Get cached settings instance"""
    return BenchSettings()
