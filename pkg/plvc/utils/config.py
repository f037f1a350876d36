"""
Configuration management for plvc
Process-level settings read from the environment (PLVC_*) and an optional .env file
"""
import os
from functools import lru_cache
from typing import Any, Dict, Literal, Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Config(BaseSettings):
    """Application configuration"""

    model_config = SettingsConfigDict(
        env_prefix="PLVC_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    ENVIRONMENT: Literal["development", "production"] = "development"
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"

    # Default worker count for Monte Carlo replications and bootstrap replicates
    THREADS: int = Field(default=1, ge=1)

    # Out-of-range index values raise instead of being clamped
    STRICT_BASIS: bool = False

    # Relative pivot tolerance of the rank-revealing QR
    PIVOT_TOLERANCE: float = Field(default=1e-10, gt=0)

    def get_numerics_config(self) -> Dict[str, Any]:
        """Get numerical configuration shared by the estimators"""
        return {
            "strict_basis": self.STRICT_BASIS,
            "pivot_tolerance": self.PIVOT_TOLERANCE,
        }


class DevelopmentConfig(Config):
    """Development environment configuration"""
    LOG_LEVEL: str = "INFO"


class ProductionConfig(Config):
    """Production environment configuration"""
    DEBUG: bool = False
    LOG_LEVEL: str = "WARNING"


@lru_cache(maxsize=None)
def _load_config(env: str) -> Config:
    if env == "production":
        return ProductionConfig()
    return DevelopmentConfig()


def get_config(environment: Optional[str] = None) -> Config:
    """Get configuration based on environment"""
    env = (environment or os.getenv("PLVC_ENVIRONMENT", "development")).lower()
    return _load_config(env)
