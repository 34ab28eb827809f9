from __future__ import annotations

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from cache import cache_result


class Settings(BaseSettings):
    """KR: 환경 변수 기반 설정입니다. EN: Environment-driven settings (prefix ACBM_)."""

    model_config = SettingsConfigDict(env_prefix="ACBM_", env_file=".env", extra="ignore")

    log_level: str = "INFO"

    # Relative tolerances; each is multiplied by the documented scale of its check.
    jacobi_tol: float = Field(default=1e-9, ge=0.0)
    class_tol: float = Field(default=1e-9, ge=0.0)
    oracle_tol: float = Field(default=1e-12, ge=0.0)
    family_tol: float = Field(default=1e-10, ge=0.0)
    branch_threshold: float = Field(default=1e-6, ge=0.0)
    spectral_gap: float = Field(default=1e-2, ge=0.0)
    spectral_merge: float = Field(default=1e-4, ge=0.0)
    minpoly_tol: float = Field(default=1e-12, ge=0.0)
    exp_tol: float = Field(default=1e-10, ge=0.0)
    near_branch_tol: float = Field(default=1e-8, ge=0.0)
    axiom_tol: float = Field(default=1e-10, ge=0.0)

    samples: int = Field(default=1000, ge=1)
    seed: int = Field(default=42, ge=0)
    probe_draws: int = Field(default=100, ge=1)
    max_workers: int = Field(default=1, ge=1)


@cache_result("settings", maxsize=1)
def get_settings() -> Settings:
    return Settings()
