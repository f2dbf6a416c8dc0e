"""
Configuration management for the gesture adaptation toolkit.

Loads settings from environment variables (prefix ``GESTURE_DA_``) and an
optional ``.env`` file. Experiment-level parameters live in JSON experiment
configs; these settings only carry machine-level defaults.
"""

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings."""

    SERVICE_NAME: str = Field(default="gesture-adaptation", description="Tool name")
    SERVICE_VERSION: str = Field(default="1.0.0", description="Tool version")
    LOG_LEVEL: str = Field(default="INFO", description="Logging level")

    # Artifacts
    OUTPUT_ROOT: str = Field(default="runs", description="Root directory for run artifacts")

    # Desk-scale defaults for synthetic runs; the full-size model uses batch 256, hidden 256
    DESK_BATCH_PER_DOMAIN: int = Field(default=32, gt=0)
    DESK_HIDDEN_DIM: int = Field(default=64, gt=0)
    DESK_EPOCHS: int = Field(default=30, ge=0)

    # Synthetic benchmark
    SYNTH_VISUAL_DIM: int = Field(default=64, gt=0, description="Visual feature width for generated data")
    SYNTH_TRIALS: int = Field(default=20, gt=0, description="Trials per domain for generated data")

    TORCH_THREADS: int | None = Field(default=None, description="Cap on intra-op torch threads")

    model_config = SettingsConfigDict(
        env_prefix="GESTURE_DA_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",  # Ignore extra environment variables not defined in this model
    )


settings = Settings()
