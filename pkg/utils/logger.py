"""
Logging utilities for laboratory runs.

This module provides contextual loggers that stamp every record with the
run ID and pipeline phase, plus helpers for timing phases.
"""

import logging
import time
import uuid
from typing import Optional


class RunIDFilter(logging.Filter):
    """Add the run ID to all log records."""

    def __init__(self, run_id: str):
        super().__init__()
        self.run_id = run_id

    def filter(self, record: logging.LogRecord) -> bool:
        record.run_id = self.run_id
        return True


class PhaseFilter(logging.Filter):
    """Add the pipeline phase (ingest, train, evaluate, ...) to all log records."""

    def __init__(self, phase: str):
        super().__init__()
        self.phase = phase

    def filter(self, record: logging.LogRecord) -> bool:
        record.phase = self.phase
        return True


def generate_run_id() -> str:
    """Generate a unique ID for one CLI invocation."""
    return str(uuid.uuid4())


def get_logger(
    name: str,
    run_id: Optional[str] = None,
    phase: Optional[str] = None
) -> logging.Logger:
    """
    Get a logger with optional run ID and phase context.

    Example:
        logger = get_logger(__name__, run_id="abc-123", phase="train")
        logger.info("Epoch finished")
    """
    logger = logging.getLogger(name)

    if run_id:
        logger.addFilter(RunIDFilter(run_id))

    if phase:
        logger.addFilter(PhaseFilter(phase))

    return logger


class ExecutionTimer:
    """
    Time a phase and log its outcome.

    Example:
        with ExecutionTimer(logger, "ablation experiment") as timer:
            ...
        timer.duration
    """

    def __init__(self, logger: logging.Logger, label: str):
        self.logger = logger
        self.label = label
        self._started: Optional[float] = None
        self.duration: Optional[float] = None

    def __enter__(self) -> "ExecutionTimer":
        self.logger.debug(f"{self.label} started")
        self._started = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        if self._started is None:
            return
        self.duration = time.perf_counter() - self._started
        details = {"duration_seconds": self.duration}
        if exc_type is None:
            self.logger.info(f"{self.label} completed in {self.duration:.2f}s", extra={"extra_data": details})
            return
        details["error_type"] = exc_type.__name__
        self.logger.error(f"{self.label} failed after {self.duration:.2f}s", extra={"extra_data": details})
