import logging
import os
import sys
from typing import Optional

from config.config import LOG_FILE_NAME, LOG_FORMAT, LOG_SUBDIR

LOGGER_NAME = "rebarscan"

_logger = logging.getLogger(LOGGER_NAME)
_logger.addHandler(logging.NullHandler())


def configure_logging(log_dir: Optional[str] = None, level: str = "INFO") -> str | None:
    """
    Attach a file handler under log_dir (plus stderr) to the package logger.
    Returns the log file path, or None when only stderr is used.
    Safe to call once per command; earlier handlers are replaced.
    """
    for handler in list(_logger.handlers):
        if not isinstance(handler, logging.NullHandler):
            _logger.removeHandler(handler)
            handler.close()

    _logger.setLevel(level.upper())
    _logger.propagate = False
    formatter = logging.Formatter(LOG_FORMAT)

    stream = logging.StreamHandler(sys.stderr)
    stream.setFormatter(formatter)
    _logger.addHandler(stream)

    if log_dir is None:
        return None

    log_path = os.path.join(log_dir, LOG_SUBDIR)
    os.makedirs(log_path, exist_ok=True)
    log_file = os.path.join(log_path, LOG_FILE_NAME)
    file_handler = logging.FileHandler(log_file, encoding="utf-8")
    file_handler.setFormatter(formatter)
    _logger.addHandler(file_handler)
    return log_file


def log_debug(message: str):
    _logger.debug(message)


def log_info(message: str):
    _logger.info(message)


def log_warning(message: str):
    _logger.warning(message)


def log_error(message: str):
    _logger.error(message)
