"""
Seeded synthetic campus data.

Each student gets a categorical profile, a latent diligence and a set of
historical semesters. Diligence drives the current semester's grade; the
borrowed-book count rises and the failed-course count falls with the grade.
Behaviors expose the student's latent drive only on a fixed set of
informative days, and the department scales how strongly that drive shows up
in the grade, so identical behaviors mean different things for different
profiles.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List

import numpy as np

from data.dataset import Dataset, RawStudent, assemble_dataset, split_students
from data.features import aggregate_courses, course_failure_rate, course_stats
from data.records import DORMITORY_SLOTS, LIBRARY_SLOTS, DailyBehaviorSequence
from models import SynthConfig

logger = logging.getLogger(__name__)

BASE_WAG = 72.0
WAG_PER_DILIGENCE = 9.0
BASE_BOOKS = 8.0
BOOKS_PER_POINT = 0.4
BASE_FAILS = 4.0
FAILS_PER_POINT = 0.2
PASS_MARK = 60.0
CATALOG_TAKERS = 60
# Share of the current drive inherited from the student's long-run trait.
TRAIT_CARRY = 0.6


@dataclass
class Course:
    course_id: str
    credit: float
    difficulty: float
    stats: np.ndarray
    failure_rate: float


def _catalog(config: SynthConfig, rng: np.random.Generator) -> List[Course]:
    courses = []
    for k in range(config.course_catalog):
        difficulty = rng.normal(0.0, 3.0)
        grades = np.clip(rng.normal(BASE_WAG + difficulty, 10.0, size=CATALOG_TAKERS), 0.0, 100.0)
        courses.append(Course(
            course_id=f"course_{k}",
            credit=float(rng.integers(1, 5)),
            difficulty=difficulty,
            stats=course_stats(grades),
            failure_rate=course_failure_rate(grades, PASS_MARK),
        ))
    return courses


def _semester_labels(
    diligence: float,
    difficulty: float,
    config: SynthConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """(WAG, books, fails) for one semester, clamped to valid ranges."""
    noise = config.task_noise
    wag = BASE_WAG + WAG_PER_DILIGENCE * diligence + difficulty
    if noise[0]:
        wag += rng.normal(0.0, noise[0])
    wag = float(np.clip(wag, 0.0, 100.0))
    books = BASE_BOOKS + config.book_sign * BOOKS_PER_POINT * (wag - BASE_WAG)
    fails = BASE_FAILS + config.fail_sign * FAILS_PER_POINT * (wag - BASE_WAG)
    if noise[1]:
        books += rng.normal(0.0, noise[1])
    if noise[2]:
        fails += rng.normal(0.0, noise[2])
    return np.array([wag, max(0.0, round(books)), max(0.0, round(fails))])


def _behavior(
    drive: float,
    days: int,
    informative: np.ndarray,
    rng: np.random.Generator,
) -> DailyBehaviorSequence:
    sequence = DailyBehaviorSequence.empty(days)
    for day in range(days):
        if informative[day]:
            visits = rng.poisson(max(0.05, 1.0 + 1.2 * drive))
            slot = int(np.clip(round(2.0 - 1.2 * drive + rng.normal(0.0, 0.5)), 0, DORMITORY_SLOTS - 1))
        else:
            visits = rng.poisson(0.8)
            slot = int(rng.integers(0, DORMITORY_SLOTS))
        if visits:
            sequence.library_days[day] = np.bincount(
                rng.integers(0, LIBRARY_SLOTS, size=visits), minlength=LIBRARY_SLOTS
            )
        sequence.dormitory_days[day, slot] = 1
    return sequence


def generate_students(config: SynthConfig) -> List[RawStudent]:
    """Draw every student in original units from one generator seeded by ``config.seed``."""
    rng = np.random.default_rng(config.seed)
    catalog = _catalog(config, rng)
    departments = [f"department_{k}" for k in range(config.profile_vocab_sizes["department"])]
    coefficient: Dict[str, float] = {d: float(rng.uniform(0.4, 1.6)) for d in departments}
    informative = np.zeros(config.days, dtype=bool)
    informative[rng.choice(config.days, size=min(config.informative_days, config.days), replace=False)] = True

    students = []
    width = len(str(config.students - 1))
    for index in range(config.students):
        attributes = {
            name: f"{name}_{int(rng.integers(0, size))}"
            for name, size in config.profile_vocab_sizes.items()
        }
        c = coefficient[attributes["department"]]
        trait = rng.normal()

        past = int(rng.integers(config.min_history, config.max_history + 1))
        rows = []
        for _ in range(past):
            drive = TRAIT_CARRY * trait + 0.8 * rng.normal()
            diligence = c * drive + config.diligence_noise * rng.normal()
            rows.append(_semester_labels(diligence, rng.normal(0.0, 1.5), config, rng))
        history = np.array(rows).reshape(past, 3)

        drive = TRAIT_CARRY * trait + 0.8 * rng.normal()
        diligence = c * drive + config.diligence_noise * rng.normal()
        taken = [catalog[k] for k in rng.choice(len(catalog), size=config.courses_per_student, replace=False)]
        credits = [course.credit for course in taken]
        difficulty = float(np.dot(credits, [course.difficulty for course in taken]) / sum(credits))

        students.append(RawStudent(
            student_id=f"s{index:0{width}d}",
            attributes=attributes,
            behavior=_behavior(drive, config.days, informative, rng),
            histories=[history[:, n].copy() for n in range(3)],
            course_features=[
                aggregate_courses([course.stats for course in taken], credits, "credit_weighted"),
                None,
                aggregate_courses(
                    [np.concatenate([[course.failure_rate], course.stats]) for course in taken],
                    credits,
                    "uniform_mean",
                ),
            ],
            labels=_semester_labels(diligence, difficulty, config, rng),
        ))
    return students


def generate(config: SynthConfig) -> Dataset:
    """Generate, split and scale a synthetic dataset; equal configs give identical datasets."""
    students = generate_students(config)
    assignment = split_students(
        [s.student_id for s in students], config.validation_fraction, config.test_fraction, config.seed
    )
    logger.info(
        f"Generated {len(students)} synthetic students",
        extra={"extra_data": {"seed": config.seed, "informative_days": config.informative_days}},
    )
    return assemble_dataset(
        students,
        assignment,
        list(config.profile_vocab_sizes),
        metadata={"source": "synth", "synth_config": config.model_dump()},
    )
