"""
CSV ingestion of campus records.

Reads footprints.csv, profiles.csv, grades.csv and borrows.csv, turns every
student with grades in the target semester into a RawStudent and assembles
the scaled dataset.
"""

import logging
import re
from collections import defaultdict
from dataclasses import dataclass
from datetime import date, datetime
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from data.dataset import Dataset, RawStudent, assemble_dataset, split_students
from data.features import (
    aggregate_courses,
    bin_dormitory_day,
    bin_library_day,
    compute_wag,
    count_failed,
    course_failure_rate,
    course_stats,
)
from data.records import (
    FOOTPRINT_KINDS,
    DailyBehaviorSequence,
    FootprintRecord,
    GradeRecord,
    StudentProfile,
)
from errors import DataError, EmptyInputError, MalformedRowError
from models import IngestConfig

logger = logging.getLogger(__name__)

FOOTPRINT_COLUMNS = ["student_id", "timestamp", "kind"]
GRADE_COLUMNS = ["student_id", "semester_index", "course_id", "credit", "grade"]
BORROW_COLUMNS = ["student_id", "semester_index", "count"]
PROFILE_ATTRIBUTES = ("place_of_birth", "nationality", "gender", "grade", "school", "department")


@dataclass
class IngestPaths:
    footprints: Path
    profiles: Path
    grades: Path
    borrows: Optional[Path] = None


# ============================================================================
# CSV loading
# ============================================================================

def _line(index: int) -> int:
    # Header is line 1.
    return int(index) + 2


def read_csv(path: Path, columns: Sequence[str]) -> pd.DataFrame:
    """Read a CSV as strings; a zero-byte or header-only file yields no rows."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"Input file '{path}' not found.")
    if path.stat().st_size == 0:
        return pd.DataFrame(columns=list(columns))
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        return pd.DataFrame(columns=list(columns))
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        raise MalformedRowError(str(path), int(match.group(1)) if match else 0, str(e)) from e

    frame.columns = [c.strip() for c in frame.columns]
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise MalformedRowError(str(path), 1, f"missing columns {missing}")
    logger.info(f"Loaded {len(frame)} rows from {path}")
    return frame


def _numeric(frame: pd.DataFrame, column: str, path: Path) -> pd.Series:
    values = pd.to_numeric(frame[column], errors="coerce")
    bad = values.isna()
    if bad.any():
        index = bad.idxmax()
        raise MalformedRowError(str(path), _line(index), f"{column} '{frame.at[index, column]}' is not a number")
    return values


def _require_ids(frame: pd.DataFrame, path: Path) -> None:
    empty = frame["student_id"].str.strip() == ""
    if empty.any():
        raise MalformedRowError(str(path), _line(empty.idxmax()), "empty student_id")


def load_footprints(path: Path) -> List[FootprintRecord]:
    frame = read_csv(path, FOOTPRINT_COLUMNS)
    if frame.empty:
        return []
    _require_ids(frame, path)
    timestamps = pd.to_datetime(frame["timestamp"], errors="coerce", format="ISO8601")
    if timestamps.isna().any():
        index = timestamps.isna().idxmax()
        raise MalformedRowError(str(path), _line(index), f"bad timestamp '{frame.at[index, 'timestamp']}'")
    unknown = ~frame["kind"].isin(FOOTPRINT_KINDS)
    if unknown.any():
        index = unknown.idxmax()
        raise MalformedRowError(str(path), _line(index), f"unknown kind '{frame.at[index, 'kind']}'")
    return [
        FootprintRecord(student_id=sid, timestamp=ts.to_pydatetime(), kind=kind)
        for sid, ts, kind in zip(frame["student_id"], timestamps, frame["kind"])
    ]


def load_profiles(path: Path) -> Tuple[Dict[str, StudentProfile], List[str]]:
    """Profiles keyed by student, plus the attribute columns in file order."""
    frame = read_csv(path, ["student_id"])
    attributes = [c for c in frame.columns if c != "student_id"]
    if frame.empty:
        return {}, attributes or list(PROFILE_ATTRIBUTES)
    _require_ids(frame, path)
    frame = frame.drop_duplicates()
    conflicting = frame["student_id"].duplicated()
    if conflicting.any():
        index = conflicting.idxmax()
        raise MalformedRowError(str(path), _line(index),
                                f"conflicting profile for student '{frame.at[index, 'student_id']}'")
    profiles = {
        row["student_id"]: StudentProfile(row["student_id"], {a: str(row[a]) for a in attributes})
        for _, row in frame.iterrows()
    }
    return profiles, attributes


def load_grades(path: Path) -> List[GradeRecord]:
    frame = read_csv(path, GRADE_COLUMNS)
    if frame.empty:
        return []
    _require_ids(frame, path)
    semesters = _numeric(frame, "semester_index", path)
    credits = _numeric(frame, "credit", path)
    grades = _numeric(frame, "grade", path)
    for index in frame.index:
        if semesters[index] < 1 or semesters[index] != int(semesters[index]):
            raise MalformedRowError(str(path), _line(index), "semester_index must be a positive integer")
        if credits[index] <= 0:
            raise MalformedRowError(str(path), _line(index), "credit must be positive")
        if not 0 <= grades[index] <= 100:
            raise MalformedRowError(str(path), _line(index), "grade must lie in [0, 100]")

    frame = frame.assign(semester_index=semesters.astype(int), credit=credits, grade=grades)
    frame = frame.drop_duplicates()
    conflicting = frame.duplicated(["student_id", "semester_index", "course_id"])
    if conflicting.any():
        index = conflicting.idxmax()
        raise MalformedRowError(str(path), _line(index), "conflicting duplicate grade record")
    return [
        GradeRecord(row.student_id, int(row.semester_index), str(row.course_id), float(row.credit), float(row.grade))
        for row in frame.itertuples(index=False)
    ]


def load_borrows(path: Optional[Path]) -> Dict[Tuple[str, int], int]:
    if path is None:
        return {}
    frame = read_csv(path, BORROW_COLUMNS)
    if frame.empty:
        return {}
    _require_ids(frame, path)
    semesters = _numeric(frame, "semester_index", path)
    counts = _numeric(frame, "count", path)
    borrows: Dict[Tuple[str, int], int] = {}
    for index in frame.index:
        if counts[index] < 0 or counts[index] != int(counts[index]):
            raise MalformedRowError(str(path), _line(index), "count must be a nonnegative integer")
        key = (frame.at[index, "student_id"], int(semesters[index]))
        if key in borrows and borrows[key] != int(counts[index]):
            raise MalformedRowError(str(path), _line(index), "conflicting duplicate borrow record")
        borrows[key] = int(counts[index])
    return borrows


# ============================================================================
# Feature construction
# ============================================================================

def day_index(timestamp: datetime, semester_start: date) -> int:
    """Day 1 is the semester start date."""
    return (timestamp.date() - semester_start).days + 1


def build_behavior(
    records: Sequence[FootprintRecord],
    semester_start: date,
    days: int,
) -> Tuple[DailyBehaviorSequence, int]:
    """Bin one student's footprints per day; returns the sequence and the count dropped outside the window."""
    by_day: Dict[Tuple[int, str], List[FootprintRecord]] = defaultdict(list)
    dropped = 0
    for record in records:
        day = day_index(record.timestamp, semester_start)
        if not 1 <= day <= days:
            dropped += 1
            continue
        by_day[(day, record.kind)].append(record)

    sequence = DailyBehaviorSequence.empty(days)
    for (day, kind), day_records in by_day.items():
        if kind == "library_entry":
            sequence.library_days[day - 1] = bin_library_day(day_records)
        else:
            sequence.dormitory_days[day - 1] = bin_dormitory_day(day_records)
    return sequence, dropped


class CourseCatalog:
    """Per-course grade statistics from semesters before the target."""

    def __init__(self, grades: Sequence[GradeRecord], target_semester: int, pass_mark: float):
        self.pass_mark = pass_mark
        history = [g for g in grades if g.semester_index < target_semester]
        self._by_course: Dict[str, List[float]] = defaultdict(list)
        for g in history:
            self._by_course[g.course_id].append(g.grade)
        self._all = [g.grade for g in history]
        self._cache: Dict[str, Tuple[np.ndarray, float]] = {}

    def features(self, course_id: str) -> Tuple[np.ndarray, float]:
        """(seven statistics, failure rate); courses never taken before use all historical grades."""
        if course_id not in self._cache:
            grades = self._by_course.get(course_id) or self._all
            if not grades:
                self._cache[course_id] = (np.zeros(7), 0.0)
            else:
                self._cache[course_id] = (course_stats(grades), course_failure_rate(grades, self.pass_mark))
        return self._cache[course_id]


def course_features(
    records: Sequence[GradeRecord],
    catalog: CourseCatalog,
) -> Tuple[np.ndarray, np.ndarray]:
    """v1 (credit-weighted statistics) and v3 (uniform mean of failure rate + statistics)."""
    if not records:
        raise EmptyInputError("course_features")
    stats, rates = zip(*(catalog.features(r.course_id) for r in records))
    credits = [r.credit for r in records]
    v1 = aggregate_courses(stats, credits, "credit_weighted")
    v3 = aggregate_courses([np.concatenate([[rate], row]) for rate, row in zip(rates, stats)],
                           credits, "uniform_mean")
    return v1, v3


# ============================================================================
# Entry point
# ============================================================================

def ingest(paths: IngestPaths, config: IngestConfig) -> Dataset:
    """Parse the four CSV exports and assemble a scaled dataset."""
    try:
        semester_start = date.fromisoformat(config.semester_start)
    except ValueError as e:
        raise DataError(f"semester_start '{config.semester_start}' is not an ISO date") from e

    footprints = load_footprints(paths.footprints)
    profiles, attributes = load_profiles(paths.profiles)
    grades = load_grades(paths.grades)
    borrows = load_borrows(paths.borrows)
    if not grades:
        raise EmptyInputError(f"{paths.grades}: no grade records")

    target = config.target_semester or max(g.semester_index for g in grades)
    by_student: Dict[str, Dict[int, List[GradeRecord]]] = defaultdict(lambda: defaultdict(list))
    for g in grades:
        by_student[g.student_id][g.semester_index].append(g)
    footprints_by_student: Dict[str, List[FootprintRecord]] = defaultdict(list)
    for record in footprints:
        footprints_by_student[record.student_id].append(record)

    catalog = CourseCatalog(grades, target, config.pass_mark)

    def books(student_id: str, semester: int) -> int:
        count = borrows.get((student_id, semester), 0)
        return min(count, config.borrow_cap) if config.borrow_cap is not None else count

    students: List[RawStudent] = []
    dropped_total = 0
    unlabeled = 0
    for student_id in sorted(by_student):
        semesters = by_student[student_id]
        if target not in semesters:
            unlabeled += 1
            continue
        behavior, dropped = build_behavior(footprints_by_student.get(student_id, []), semester_start, config.days)
        dropped_total += dropped

        past = sorted(s for s in semesters if s < target)
        histories = [
            np.array([compute_wag(semesters[s]) for s in past]),
            np.array([books(student_id, s) for s in past], dtype=np.float64),
            np.array([count_failed(semesters[s], config.pass_mark) for s in past], dtype=np.float64),
        ]
        v1, v3 = course_features(semesters[target], catalog)
        current = semesters[target]
        profile = profiles.get(student_id)
        students.append(RawStudent(
            student_id=student_id,
            attributes=dict(profile.attributes) if profile else {},
            behavior=behavior,
            histories=histories,
            course_features=[v1, None, v3],
            labels=np.array([
                compute_wag(current), books(student_id, target), count_failed(current, config.pass_mark)
            ], dtype=np.float64),
        ))

    if dropped_total:
        logger.warning(
            f"Dropped {dropped_total} footprint records outside the {config.days}-day window",
            extra={"extra_data": {"dropped": dropped_total}},
        )
    if unlabeled:
        logger.warning(f"Skipped {unlabeled} students without grades in semester {target}")
    if not students:
        raise EmptyInputError(f"No students with grades in semester {target}")

    assignment = split_students(
        [s.student_id for s in students], config.validation_fraction, config.test_fraction, config.seed
    )
    return assemble_dataset(
        students,
        assignment,
        attributes,
        metadata={
            "source": "ingest",
            "target_semester": target,
            "dropped_footprints": dropped_total,
            "skipped_students": unlabeled,
            "ingest_config": config.model_dump(),
        },
    )
