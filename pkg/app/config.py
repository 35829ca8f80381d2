from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8", extra="ignore")

    app_name: str = "Geodesic Offset Lab"
    app_version: str = "0.1.0"
    log_level: str = "INFO"

    fd_step_scale: float = Field(default=1e-5, gt=0)
    fd_rel_tolerance: float = Field(default=1e-6, gt=0)

    integrator_tol: float = Field(default=1e-10, gt=0)
    stencil_integrator_tol: float = Field(default=1e-12, gt=0)
    curve_nodes: int = Field(default=201, ge=5)
    stencil_step: float = Field(default=1e-3, gt=0)

    footpoint_grid: int = Field(default=64, ge=8)
    footpoint_max_iter: int = Field(default=50, ge=1)
    footpoint_tol: float = Field(default=1e-10, gt=0)
    multivalued_tie: float = Field(default=1e-6, gt=0)

    convexity_grid: int = Field(default=1000, ge=64)

    seed: int = 42
    random_geodesics: int = Field(default=20, ge=1)
    out_dir: str = "results"


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()
