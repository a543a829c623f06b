from pydantic_settings import BaseSettings
from pathlib import Path
from typing import Optional

PROJECT_ROOT = Path(__file__).resolve().parents[2]


class Settings(BaseSettings):
    """
    Engine configuration management
    Values can be overridden with RBT_* environment variables or a .env file
    """

    # Application configuration
    app_name: str = "Reconfigurable Behavior Tree Engine"
    app_version: str = "1.0.0"
    debug: bool = False

    # Long-term memory and scenarios
    ltm_dir: Path = PROJECT_ROOT / "data" / "ltm"
    scenario_dir: Path = PROJECT_ROOT / "data" / "scenarios"
    root_task: str = "rbt_root"
    sort_task: str = "sort box"

    # Tick loop
    tick_period_ms: float = 10.0
    max_ticks: int = 10000

    # Priority thresholds, meters
    theta_min: float = 0.05
    theta_max: float = 1.0

    # Stepped simulation, meters per step
    step_size: float = 0.05

    # Logging configuration
    log_level: str = "INFO"
    log_file: Optional[Path] = None

    class Config:
        env_prefix = "RBT_"
        env_file = ".env"
        env_file_encoding = "utf-8"


settings = Settings()
