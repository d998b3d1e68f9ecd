"""
Centralized logging configuration for the DAPAMT laboratory.

Console output is colored and human readable; the rotating file logs are
JSON so training runs can be replayed and grepped afterwards.
"""

import json
import logging
import logging.handlers
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List

# Attributes stamped on records by the filters in utils.logger
CONTEXT_FIELDS = ("run_id", "phase")

LOG_FILE = "dapamt.log"
ERROR_FILE = "errors.log"
MAX_LOG_BYTES = 10 * 1024 * 1024
LOG_BACKUPS = 5


def _level(name: str) -> int:
    return getattr(logging, name.upper(), logging.INFO)


class JSONFormatter(logging.Formatter):
    """One JSON object per record, with run context and extra_data merged in."""

    def format(self, record: logging.LogRecord) -> str:
        payload: Dict[str, Any] = {
            "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        for field in CONTEXT_FIELDS:
            if hasattr(record, field):
                payload[field] = getattr(record, field)
        payload.update(getattr(record, "extra_data", None) or {})
        if record.exc_info:
            payload["exception"] = self.formatException(record.exc_info)
        return json.dumps(payload, default=str)


class HumanReadableFormatter(logging.Formatter):
    """Colored console lines: level, logger, short run id, phase, message."""

    LEVEL_COLORS = {
        "DEBUG": "\033[36m",
        "INFO": "\033[32m",
        "WARNING": "\033[33m",
        "ERROR": "\033[31m",
        "CRITICAL": "\033[35m",
    }
    RESET = "\033[0m"

    def _tags(self, record: logging.LogRecord) -> List[str]:
        tags = []
        if hasattr(record, "run_id"):
            tags.append(f"({record.run_id[:8]})")
        if hasattr(record, "phase"):
            tags.append(f"<{record.phase}>")
        return tags

    def format(self, record: logging.LogRecord) -> str:
        color = self.LEVEL_COLORS.get(record.levelname)
        level = f"{record.levelname:8}"
        if color:
            level = f"{color}{level}{self.RESET}"

        line = " ".join([level, f"[{record.name}]", *self._tags(record), record.getMessage()])
        if record.exc_info:
            line += "\n" + self.formatException(record.exc_info)
        return line


def _rotating_handler(path: Path, level: int) -> logging.Handler:
    handler = logging.handlers.RotatingFileHandler(
        filename=path, maxBytes=MAX_LOG_BYTES, backupCount=LOG_BACKUPS, encoding="utf-8"
    )
    handler.setLevel(level)
    handler.setFormatter(JSONFormatter())
    return handler


def setup_logging(
    log_dir: str = "logs",
    level: str = "INFO",
    format_type: str = "human",
    enable_console: bool = True,
    enable_file: bool = True
) -> None:
    """
    Configure application-wide logging.

    Replaces any handlers already on the root logger. The files always
    receive DEBUG and above; ``level`` applies to the console.

    Args:
        log_dir: Directory for dapamt.log and errors.log
        level: Console level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        format_type: Console format, "human" or "json"
        enable_console: Whether to log to stderr
        enable_file: Whether to write the rotating JSON files
    """
    root = logging.getLogger()
    root.handlers.clear()
    root.setLevel(logging.DEBUG if enable_file else _level(level))

    if enable_console:
        console = logging.StreamHandler()
        console.setLevel(_level(level))
        console.setFormatter(JSONFormatter() if format_type == "json" else HumanReadableFormatter())
        root.addHandler(console)

    if enable_file:
        directory = Path(log_dir)
        directory.mkdir(parents=True, exist_ok=True)
        root.addHandler(_rotating_handler(directory / LOG_FILE, logging.DEBUG))
        root.addHandler(_rotating_handler(directory / ERROR_FILE, logging.ERROR))

    root.debug(
        "Logging configured",
        extra={"extra_data": {"level": level, "format": format_type,
                              "console": enable_console, "file": enable_file}},
    )
