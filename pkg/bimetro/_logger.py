"""
Configuration of the module logger.
"""

__all__ = ["get_logger", "logger"]

import logging
import os
from datetime import datetime
from typing import Optional

from bimetro import _config
from bimetro._metadata import __version__

_LOGFILE: Optional[str] = None


def get_logger(name: str = "bimetro") -> logging.Logger:
    """
    Access the module logger, create a new one if does not exist yet.

    The console handler reports INFO and above; a DEBUG-level file handler is
    attached when ``log_to_disk`` is set in the configuration.

    Args:
        name: name of the logger instance.

    Returns:
        An instance of the Python :py:mod:`logging.Logger`.
    """
    global _LOGFILE

    if not logging.getLogger(name).hasHandlers():
        logger = logging.getLogger(name)
        logger.setLevel(logging.DEBUG)
        logger.propagate = True

        file_formatter = logging.Formatter(
            "%(asctime)s\t%(levelname)s\tmodule:%(module)s\n%(message)s",
        )
        stdout_formatter = logging.Formatter("%(levelname)s -- %(message)s")

        settings = _config.config("bimetro")
        if settings.get("log_to_disk"):
            logdir = settings.get("log_directory") or "bimetro-log"
            os.makedirs(logdir, exist_ok=True)
            date_time = datetime.now().strftime("%Y%m%d-%H%M%S")
            _LOGFILE = os.path.join(logdir, f"bimetro-{date_time}.log")
            file_handler = logging.FileHandler(_LOGFILE)
            file_handler.setLevel(logging.DEBUG)
            file_handler.setFormatter(file_formatter)
            logger.addHandler(file_handler)

        stdout_handler = logging.StreamHandler()
        stdout_handler.setLevel(logging.INFO)
        stdout_handler.setFormatter(stdout_formatter)
        logger.addHandler(stdout_handler)

        logger.debug(f"This is bimetro v{__version__}.")
        if _LOGFILE:
            logger.info(f"Logging into `{_LOGFILE}`.")

    return logging.getLogger(name)


logger = get_logger()
