import logging
import logging.config
from pathlib import Path
from typing import Dict, Any, Optional

LOGGING_CONFIG: Dict[str, Any] = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "standard": {
            "format": "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
        },
        "detailed": {
            "format": "%(asctime)s [%(levelname)s] %(name)s:%(lineno)d: %(message)s"
        }
    },
    "handlers": {
        "default": {
            "level": "INFO",
            "formatter": "standard",
            "class": "logging.StreamHandler",
            "stream": "ext://sys.stderr"
        }
    },
    "loggers": {
        "": {
            "handlers": ["default"],
            "level": "INFO",
            "propagate": False
        }
    }
}


def setup_logging(level: str = "INFO", log_file: Optional[Path] = None):
    """Configure engine logging, adding a detailed file handler when a log file is given"""
    config = {
        **LOGGING_CONFIG,
        "handlers": {name: dict(handler) for name, handler in LOGGING_CONFIG["handlers"].items()},
        "loggers": {name: dict(logger) for name, logger in LOGGING_CONFIG["loggers"].items()},
    }
    config["handlers"]["default"]["level"] = level.upper()
    config["loggers"][""]["level"] = level.upper()

    if log_file is not None:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        config["handlers"]["file"] = {
            "level": "DEBUG",
            "formatter": "detailed",
            "class": "logging.FileHandler",
            "filename": str(log_file),
            "mode": "a"
        }
        config["loggers"][""]["handlers"] = ["default", "file"]
        config["loggers"][""]["level"] = "DEBUG"

    logging.config.dictConfig(config)
