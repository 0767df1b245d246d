"""
tdlab Configuration
Policy-evaluation laboratory settings
"""

from typing import Literal
from functools import lru_cache

import structlog
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

logger = structlog.get_logger(__name__)


class Settings(BaseSettings):
    """Lab settings loaded from environment variables (prefix TDLAB_)"""

    model_config = SettingsConfigDict(
        env_prefix="TDLAB_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # =============  Application Settings =============
    app_name: str = "tdlab"
    app_version: str = "1.0.0"
    app_description: str = "Policy-evaluation laboratory for projected Bellman error tracking"

    # =============  Logging Settings =============
    log_level: str = "INFO"
    log_format: Literal["json", "console"] = "console"

    # =============  Numerical Guards =============
    max_condition_number: float = Field(
        default=1e12,
        gt=1.0,
        description="Gram / TD-system matrices above this condition number are rejected"
    )
    divergence_threshold: float = Field(
        default=1e8,
        gt=0.0,
        description="Parameter norm above which a stepper reports divergence"
    )
    inner_cap: int = Field(default=10_000, ge=1, description="coordinate descent inner-loop cap")

    # =============  Scenario Defaults =============
    default_discount: float = Field(default=0.9, gt=0.0, le=1.0)
    default_epsilon_feature: float = Field(default=0.01, gt=0.0)

    # =============  Harness Settings =============
    default_probe_every: int = Field(default=100, ge=1)
    compare_workers: int = Field(default=1, ge=1)
    record_wall_time: bool = False

    @field_validator("default_discount")
    @classmethod
    def validate_discount(cls, v: float) -> float:
        """Undiscounted defaults are legal but break the exact value solve"""
        if v == 1.0:
            logger.warning(
                "default_discount.undiscounted",
                discount=v,
                recommendation="Use discount < 1 for exact value and T-lambda oracles"
            )
        return v

    @field_validator("default_probe_every")
    @classmethod
    def validate_probe_every(cls, v: int) -> int:
        if v == 1:
            logger.warning(
                "default_probe_every.dense",
                probe_every=v,
                recommendation="Probing every step evaluates exact errors on each update"
            )
        return v


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance"""
    return Settings()
