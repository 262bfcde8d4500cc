"""
JSON-lines logging for runs.

Every record becomes one JSON object with timestamp, level, logger and
message, plus whatever structured fields the caller passed via ``extra``.
"""

import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Union

import numpy as np

# Attributes every LogRecord carries; anything else came from ``extra``.
_RESERVED = frozenset(logging.LogRecord("", 0, "", 0, "", None, None).__dict__) | {"message", "asctime"}


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    return value


class JSONFormatter(logging.Formatter):
    """One JSON object per line, extra fields merged at top level."""

    def format(self, record):
        log_obj = {
            "timestamp": datetime.fromtimestamp(record.created, timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        for key, value in record.__dict__.items():
            if key not in _RESERVED and not key.startswith("_"):
                log_obj[key] = _jsonable(value)
        if record.exc_info:
            log_obj["exception"] = self.formatException(record.exc_info)
        return json.dumps(log_obj, default=str)


def setup_logging(
    log_dir: Union[str, Path] = "logs",
    name: str = "milseq",
    level: int = logging.INFO,
    console: bool = True,
) -> Path:
    """
    Attach a JSON file handler (DEBUG) and a plain console handler to the root logger.

    Handlers installed by an earlier call are replaced, so repeated runs in
    one process do not duplicate output.

    Returns:
        Path of the new log file
    """
    log_dir = Path(log_dir)
    log_dir.mkdir(parents=True, exist_ok=True)
    log_file = log_dir / f"{name}_{datetime.now(timezone.utc).strftime('%Y%m%d_%H%M%S')}.json"

    root_logger = logging.getLogger()
    for handler in list(root_logger.handlers):
        if getattr(handler, "_milseq_handler", False):
            root_logger.removeHandler(handler)
            handler.close()
    root_logger.setLevel(logging.DEBUG)

    file_handler = logging.FileHandler(log_file)
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(JSONFormatter())
    file_handler._milseq_handler = True
    root_logger.addHandler(file_handler)

    if console:
        console_handler = logging.StreamHandler()
        console_handler.setLevel(level)
        console_handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
        console_handler._milseq_handler = True
        root_logger.addHandler(console_handler)

    return log_file


def teardown_logging() -> None:
    """Remove and close the handlers ``setup_logging`` installed."""
    root_logger = logging.getLogger()
    for handler in list(root_logger.handlers):
        if getattr(handler, "_milseq_handler", False):
            root_logger.removeHandler(handler)
            handler.close()
