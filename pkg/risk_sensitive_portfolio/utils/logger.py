import functools
import logging
import os
import sys
from datetime import datetime
from pathlib import Path
from typing import Dict, Optional

import yaml
from pydantic import BaseModel
from rich.console import Console
from rich.logging import RichHandler

LOG_LEVEL_MAP = {
    "DEBUG": logging.DEBUG,
    "INFO": logging.INFO,
    "WARNING": logging.WARNING,
    "ERROR": logging.ERROR,
    "CRITICAL": logging.CRITICAL,
}

# logger name -> rich_console, for every logger built by get_logger
_CONFIGURED: Dict[str, bool] = {}


def log_dir() -> Path:
    return Path(os.getenv("LOG_DIR", "logs"))


def get_logger(
    name: str,
    save_log_file: Optional[bool] = None,
    level: Optional[str] = None,
    rich_console: bool = True,
    format: str = "%(asctime)s %(levelname)s %(name)s: %(message)s",
    rich_format: str = "%(message)s",
    date_format: str = "[%Y-%m-%d %H:%M:%S]",
) -> logging.Logger:
    """
    Get a configured logger instance.

    Args:
        name: Name of the logger
        save_log_file: Whether to also write to LOG_DIR/<name>.log
            (default: SAVE_LOG_FILE env var == "1")
        level: Logging level (default: LOG_LEVEL env var or INFO)
        rich_console: Whether to use rich console logging (default: True)
        format: Format for file and plain console logging
        rich_format: Format for rich console logging
        date_format: Date format for logging

    Returns:
        Configured logger instance
    """
    if save_log_file is None:
        save_log_file = os.getenv("SAVE_LOG_FILE", "0") == "1"
    level = (level or os.getenv("LOG_LEVEL", "INFO")).upper()
    logger = logging.getLogger(name)
    logger.setLevel(LOG_LEVEL_MAP[level])
    logger.propagate = False
    _CONFIGURED[name] = rich_console

    # Remove existing handlers
    for handler in logger.handlers:
        handler.close()
    logger.handlers = []

    if rich_console:
        console_handler = RichHandler(
            console=Console(stderr=True),
            show_time=True,
            show_path=False,
            markup=False,
            rich_tracebacks=True,
        )
        console_handler.setFormatter(
            logging.Formatter(rich_format, datefmt=date_format)
        )
    else:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(logging.Formatter(format, datefmt=date_format))

    console_handler.setLevel(level)
    logger.addHandler(console_handler)

    if save_log_file:
        log_path = log_dir() / f"{name}.log"
        log_path.parent.mkdir(parents=True, exist_ok=True)

        file_handler = logging.FileHandler(log_path)
        file_handler.setFormatter(logging.Formatter(format, datefmt=date_format))
        file_handler.setLevel(level)
        logger.addHandler(file_handler)

    return logger


def reconfigure_loggers() -> None:
    """Rebuild every logger made by `get_logger` from the current LOG_LEVEL,
    SAVE_LOG_FILE and LOG_DIR, e.g. after a `.env` file has been loaded."""
    for name, rich_console in list(_CONFIGURED.items()):
        get_logger(name, rich_console=rich_console)


def log_execution(logger: Optional[logging.Logger] = None):
    """
    Decorator to log function execution with timing.

    Args:
        logger: Logger instance to use. If None, creates a new logger.
    """

    def decorator(func):
        nonlocal logger
        if logger is None:
            logger = get_logger(func.__module__)

        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            start_time = datetime.now()
            logger.debug(f"Starting {func.__name__}")
            try:
                result = func(*args, **kwargs)
                execution_time = datetime.now() - start_time
                logger.info(f"Completed {func.__name__} in {execution_time}")
                return result
            except Exception as e:
                execution_time = datetime.now() - start_time
                logger.error(
                    f"Error in {func.__name__} after {execution_time}: {str(e)}",
                    exc_info=logger.isEnabledFor(logging.DEBUG),
                )
                raise

        return wrapper

    return decorator


def log_as_yaml(logger: logging.Logger, model_object: BaseModel) -> str:
    """Log a pydantic model as a YAML document and return the YAML text."""
    parsed_data = model_object.model_dump(mode="json")
    yaml_str = yaml.dump(
        parsed_data,
        sort_keys=False,
        allow_unicode=True,
        default_flow_style=False,
        explicit_start=True,
    )
    logger.info(yaml_str)
    return yaml_str
