"""
Feature extraction from raw records: hourly behavior binning, semester
grade summaries and per-course grade statistics.
"""

from typing import Literal, Sequence

import numpy as np

from data.records import (
    DORMITORY_FIRST_HOUR,
    DORMITORY_SLOTS,
    LIBRARY_FIRST_HOUR,
    LIBRARY_SLOTS,
    FootprintRecord,
    GradeRecord,
)
from errors import DataError, EmptyInputError

COURSE_STAT_NAMES = ("min", "max", "median", "q1", "q3", "mean", "std")


def bin_library_day(records: Sequence[FootprintRecord]) -> np.ndarray:
    """Count library entries per hour slot [07:00, 23:00); other hours are dropped."""
    counts = np.zeros(LIBRARY_SLOTS, dtype=np.int64)
    for record in records:
        slot = record.timestamp.hour - LIBRARY_FIRST_HOUR
        if 0 <= slot < LIBRARY_SLOTS:
            counts[slot] += 1
    return counts


def bin_dormitory_day(records: Sequence[FootprintRecord]) -> np.ndarray:
    """One-hot of the hour of the day's last dormitory entry when it falls in [18:00, 24:00)."""
    indicators = np.zeros(DORMITORY_SLOTS, dtype=np.int64)
    if not records:
        return indicators
    last = max(records, key=lambda record: record.timestamp)
    slot = last.timestamp.hour - DORMITORY_FIRST_HOUR
    if 0 <= slot < DORMITORY_SLOTS:
        indicators[slot] = 1
    return indicators


def compute_wag(records: Sequence[GradeRecord]) -> float:
    """Credit-weighted average grade of one student-semester."""
    if not records:
        raise EmptyInputError("compute_wag")
    credits = np.array([r.credit for r in records], dtype=np.float64)
    grades = np.array([r.grade for r in records], dtype=np.float64)
    if np.any(credits <= 0):
        raise DataError("compute_wag: credits must be positive")
    return float(np.dot(credits, grades) / credits.sum())


def count_failed(records: Sequence[GradeRecord], pass_mark: float = 60.0) -> int:
    if not records:
        raise EmptyInputError("count_failed")
    return int(sum(1 for r in records if r.grade < pass_mark))


def course_stats(grades: Sequence[float]) -> np.ndarray:
    """
    min, max, median, Q1, Q3, mean and population std of one course's grades.

    Quartiles interpolate linearly between the closest ranks.
    """
    values = np.asarray(grades, dtype=np.float64)
    if values.size == 0:
        raise EmptyInputError("course_stats")
    q1, median, q3 = np.percentile(values, [25, 50, 75], method="linear")
    return np.array([
        values.min(), values.max(), median, q1, q3, values.mean(), values.std(ddof=0),
    ])


def course_failure_rate(grades: Sequence[float], pass_mark: float = 60.0) -> float:
    values = np.asarray(grades, dtype=np.float64)
    if values.size == 0:
        raise EmptyInputError("course_failure_rate")
    return float(np.mean(values < pass_mark))


def aggregate_courses(
    rows: Sequence[Sequence[float]],
    credits: Sequence[float],
    mode: Literal["credit_weighted", "uniform_mean"],
) -> np.ndarray:
    """Merge per-course feature rows into one row (credit-weighted or plain mean)."""
    matrix = np.asarray(rows, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        raise EmptyInputError("aggregate_courses")
    weights = np.asarray(credits, dtype=np.float64)
    if weights.shape != (matrix.shape[0],):
        raise DataError(
            f"aggregate_courses: {matrix.shape[0]} feature rows but {weights.size} credits"
        )
    if mode == "credit_weighted":
        if np.any(weights <= 0):
            raise DataError("aggregate_courses: credits must be positive")
        return weights @ matrix / weights.sum()
    if mode == "uniform_mean":
        return matrix.mean(axis=0)
    raise DataError(f"aggregate_courses: unknown mode '{mode}'")
