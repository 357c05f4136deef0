"""Configuration settings for the MOEA/D behavior workbench"""

from pathlib import Path
from typing import Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# Get the project root directory
PROJECT_ROOT = Path(__file__).parent.parent.absolute()


class Settings(BaseSettings):
    """
    Application settings loaded from environment variables (prefix MOEAD_).

    All settings can be configured via .env file or environment variables;
    command-line flags override them for one invocation.
    """

    # Output settings
    output_dir: Path = Field(
        default=Path("results"),
        description="Directory receiving run logs, tables and graphs"
    )

    database_url: Optional[str] = Field(
        default=None,
        description="Catalog URL; defaults to a SQLite file inside the output directory"
    )

    # Execution settings
    workers: int = Field(
        default=1,
        description="Worker processes for independent runs"
    )

    master_seed: int = Field(
        default=1,
        description="Master seed all run seeds are derived from"
    )

    base_config: str = Field(
        default="auto-moead",
        description="Name of the configuration variants are compared against"
    )

    # Analysis settings
    precision: int = Field(
        default=2,
        description="Decimals of the STN decision-space partition"
    )

    ref_point: float = Field(
        default=1.1,
        description="Hypervolume reference value, repeated over the objectives"
    )

    checkpoint: int = Field(
        default=1000,
        description="Evaluations between anytime-HV checkpoints"
    )

    # Logging settings
    debug: bool = Field(
        default=False,
        description="Enable debug mode (verbose logging)"
    )

    log_level: str = Field(
        default="INFO",
        description="Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)"
    )

    # Application settings
    app_name: str = Field(
        default="moead-behavior",
        description="Application name"
    )

    app_version: str = Field(
        default="1.0.0",
        description="Application version"
    )

    model_config = SettingsConfigDict(
        env_prefix="MOEAD_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )

    @field_validator("workers")
    @classmethod
    def validate_workers(cls, v: int) -> int:
        if v < 1:
            raise ValueError("MOEAD_WORKERS must be at least 1")
        return v

    @field_validator("precision")
    @classmethod
    def validate_precision(cls, v: int) -> int:
        if not 0 <= v <= 6:
            raise ValueError("MOEAD_PRECISION must be within [0, 6]")
        return v

    @field_validator("ref_point")
    @classmethod
    def validate_ref_point(cls, v: float) -> float:
        if v <= 1.0:
            raise ValueError("MOEAD_REF_POINT must exceed 1 (objectives are scaled to [0, 1])")
        return v

    @field_validator("checkpoint")
    @classmethod
    def validate_checkpoint(cls, v: int) -> int:
        if v < 1:
            raise ValueError("MOEAD_CHECKPOINT must be at least 1")
        return v

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level"""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        v_upper = v.upper()
        if v_upper not in valid_levels:
            raise ValueError(f"MOEAD_LOG_LEVEL must be one of: {', '.join(valid_levels)}")
        return v_upper

    @property
    def effective_log_level(self) -> str:
        return "DEBUG" if self.debug else self.log_level

    def catalog_url(self, output_dir: Optional[Path] = None) -> str:
        if self.database_url:
            return self.database_url
        path = (Path(output_dir) if output_dir else self.output_dir).absolute() / "catalog.db"
        return f"sqlite+aiosqlite:///{path}"


# Create global settings instance
try:
    settings = Settings()
except Exception as e:
    print(f"Error loading settings: {e}")
    print("\nCheck the MOEAD_* environment variables or your .env file.")
    raise


def print_settings_info():
    """Print current settings (for debugging)"""
    print("=" * 60)
    print(f"{settings.app_name} - Configuration")
    print("=" * 60)
    print(f"Version: {settings.app_version}")
    print(f"Output directory: {settings.output_dir}")
    print(f"Catalog: {settings.catalog_url()}")
    print(f"Workers: {settings.workers}")
    print(f"Master seed: {settings.master_seed}")
    print(f"Base config: {settings.base_config}")
    print(f"STN precision: {settings.precision}")
    print(f"HV reference: {settings.ref_point}")
    print(f"Checkpoint: {settings.checkpoint}")
    print(f"Log level: {settings.effective_log_level}")
    print("=" * 60)


if __name__ == "__main__":
    print_settings_info()
