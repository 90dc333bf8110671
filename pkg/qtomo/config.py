"""
Qtomo central configuration using Pydantic.
All settings can be overridden via environment variables or a .env file.
"""

from pathlib import Path
from typing import List

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Central configuration for the Qtomo toolkit."""
    
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )
    
    # Storage paths
    reports_root: Path = Field(
        default=Path("reports"),
        description="Base directory for report bundles"
    )
    
    # Network model
    werner_ceiling: float = Field(
        default=1.0 - 1e-9,
        description="Werner parameters at or above this value are rejected on load"
    )
    
    # QFIM numerics
    psd_tolerance: float = Field(
        default=1e-10,
        description="Absolute eigenvalue tolerance for the PSD check"
    )
    singular_tolerance: float = Field(
        default=1e-12,
        description="Relative eigenvalue cut-off below which a QFIM direction is not estimable"
    )
    
    # Branch-and-bound solver
    solver_node_limit: int = Field(
        default=2_000_000,
        description="Maximum number of search nodes before the solver gives up"
    )
    solver_time_limit: float = Field(
        default=600.0,
        description="Wall-clock limit for a single solve, in seconds"
    )
    solver_tolerance: float = Field(
        default=1e-9,
        description="Relative tolerance used to compare objective values"
    )
    
    # Simulation studies
    default_trials: int = Field(default=500, description="Monte-Carlo trials per sample size")
    default_n_grid: List[int] = Field(
        default=[1000, 10000, 100000],
        description="Shots per probe evaluated by MSE studies"
    )
    study_workers: int = Field(default=1, description="Worker processes for MSE studies")
    oracle_grid_points: int = Field(
        default=201,
        description="Grid points per refinement round of the numeric likelihood oracle"
    )
    
    # Logging
    log_level: str = Field(default="INFO", description="Logging level")
    
    @property
    def logs_dir(self) -> Path:
        """Directory for logs not tied to a report bundle."""
        return self.reports_root / "logs"
    
    def ensure_directories(self) -> None:
        """Ensure all required directories exist."""
        self.reports_root.mkdir(parents=True, exist_ok=True)
        self.logs_dir.mkdir(parents=True, exist_ok=True)


# Global settings instance
settings = Settings()
settings.ensure_directories()
