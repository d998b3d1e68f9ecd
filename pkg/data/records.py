"""
Raw campus record types.

Footprints and grades come straight from the CSV exports; profiles are a
free-form attribute map so new demographic columns need no code change.
"""

from dataclasses import dataclass, field
from datetime import datetime
from typing import Dict, Literal

import numpy as np

FootprintKind = Literal["library_entry", "dormitory_entry"]
FOOTPRINT_KINDS = ("library_entry", "dormitory_entry")

LIBRARY_FIRST_HOUR = 7
LIBRARY_SLOTS = 16
DORMITORY_FIRST_HOUR = 18
DORMITORY_SLOTS = 6


@dataclass(frozen=True)
class FootprintRecord:
    student_id: str
    timestamp: datetime
    kind: FootprintKind


@dataclass(frozen=True)
class GradeRecord:
    student_id: str
    semester_index: int
    course_id: str
    credit: float
    grade: float


@dataclass(frozen=True)
class StudentProfile:
    student_id: str
    attributes: Dict[str, str] = field(default_factory=dict)


@dataclass
class DailyBehaviorSequence:
    """Per-day library visit counts (X, 16) and dormitory return indicators (X, 6)."""
    library_days: np.ndarray
    dormitory_days: np.ndarray

    @classmethod
    def empty(cls, days: int) -> "DailyBehaviorSequence":
        return cls(
            library_days=np.zeros((days, LIBRARY_SLOTS), dtype=np.int64),
            dormitory_days=np.zeros((days, DORMITORY_SLOTS), dtype=np.int64),
        )

    @property
    def days(self) -> int:
        return self.library_days.shape[0]
