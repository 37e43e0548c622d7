"""Runtime configuration from environment variables."""

from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Runtime settings loaded from environment (prefix ``JMGT_``)."""

    threads: int | None = None
    output_dir: Path = Path("runs")
    log_level: str = "INFO"

    # Numerical tolerances
    rounding_tol: float = 1e-10
    compat_tol: float = 1e-8
    picard_max_iter: int = 50
    picard_tol: float = 1e-10
    min_points_per_wavelength: float = 10.0
    default_big_m: float = 50.0

    model_config = SettingsConfigDict(
        env_prefix="JMGT_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )


settings = Settings()
