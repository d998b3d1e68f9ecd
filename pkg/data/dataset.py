"""
Model-ready datasets.

A ``RawStudent`` holds one student's features in original units, as produced
by CSV ingestion or the synthetic generator. ``assemble_dataset`` fits the
profile vocabulary and every scaler on the training split, scales all
students, and returns a ``Dataset`` that serializes to a single JSON file.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np

from config import Config
from data.records import DailyBehaviorSequence
from data.scaling import Scaler, fit_scaler
from errors import DatasetFormatError, ScalerError
from models import TASK_NAMES
from utils.output_manager import atomic_write_text

logger = logging.getLogger(__name__)

SPLITS = ("train", "validation", "test")


@dataclass
class RawStudent:
    student_id: str
    attributes: Dict[str, str]
    behavior: DailyBehaviorSequence
    histories: List[np.ndarray]                    # original units, one per task
    course_features: List[Optional[np.ndarray]]    # aggregated v_n, None when the task has none
    labels: Optional[np.ndarray] = None            # original units (WAG, books, fails)


@dataclass
class TaskSample:
    student_id: str
    split: str
    profile: np.ndarray                            # concatenated one-hot
    behaviors: List[np.ndarray]                    # (X, 16) scaled counts, (X, 6) indicators
    histories: List[np.ndarray]                    # scaled to [0, 1], variable length
    raw_histories: List[np.ndarray]
    course_features: List[Optional[np.ndarray]]
    labels: Optional[np.ndarray] = None            # scaled to [-1, 1]
    raw_labels: Optional[np.ndarray] = None

    @property
    def history_length(self) -> int:
        return max((h.size for h in self.histories), default=0)


@dataclass
class Dataset:
    samples: List[TaskSample]
    scalers: Dict[str, Scaler]
    vocabulary: Dict[str, List[str]]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def split(self, name: str) -> List[TaskSample]:
        return [s for s in self.samples if s.split == name]

    def by_ids(self, student_ids: Sequence[str]) -> List[TaskSample]:
        index = {s.student_id: s for s in self.samples}
        missing = [sid for sid in student_ids if sid not in index]
        if missing:
            raise DatasetFormatError(f"Unknown student ids: {', '.join(missing[:5])}")
        return [index[sid] for sid in student_ids]

    @property
    def profile_dim(self) -> int:
        return sum(len(values) for values in self.vocabulary.values())

    @property
    def behavior_dims(self) -> List[int]:
        return [b.shape[1] for b in self.samples[0].behaviors] if self.samples else []

    @property
    def days(self) -> int:
        return self.samples[0].behaviors[0].shape[0] if self.samples else 0

    @property
    def course_dims(self) -> List[int]:
        dims = [0] * len(TASK_NAMES)
        for sample in self.samples:
            for n, row in enumerate(sample.course_features):
                if row is not None:
                    dims[n] = row.size
        return dims

    def label_scaler(self, task: int) -> Scaler:
        key = f"label_{TASK_NAMES[task]}"
        if key not in self.scalers:
            raise ScalerError(f"Dataset has no scaler '{key}'")
        return self.scalers[key]

    # ------------------------------------------------------------------ I/O

    def to_dict(self) -> Dict[str, Any]:
        def optional(array: Optional[np.ndarray]):
            return None if array is None else array.tolist()

        return {
            "format_version": Config.DATASET_FORMAT_VERSION,
            "metadata": self.metadata,
            "vocabulary": self.vocabulary,
            "scalers": {name: scaler.to_dict() for name, scaler in self.scalers.items()},
            "samples": [
                {
                    "student_id": s.student_id,
                    "split": s.split,
                    "profile": s.profile.tolist(),
                    "behaviors": [b.tolist() for b in s.behaviors],
                    "histories": [h.tolist() for h in s.histories],
                    "raw_histories": [h.tolist() for h in s.raw_histories],
                    "course_features": [optional(v) for v in s.course_features],
                    "labels": optional(s.labels),
                    "raw_labels": optional(s.raw_labels),
                }
                for s in self.samples
            ],
        }

    def save(self, path: Path) -> Path:
        return atomic_write_text(Path(path), json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path: Path) -> "Dataset":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as e:
            raise DatasetFormatError(f"Dataset file '{path}' not found.") from e
        except json.JSONDecodeError as e:
            raise DatasetFormatError(f"Dataset file '{path}' is not valid JSON: {e}") from e
        return cls.from_dict(payload)

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "Dataset":
        if payload.get("format_version") != Config.DATASET_FORMAT_VERSION:
            raise DatasetFormatError(
                f"Unsupported dataset format version {payload.get('format_version')!r}"
            )

        def array(values, dtype=np.float64):
            return None if values is None else np.asarray(values, dtype=dtype)

        try:
            samples = [
                TaskSample(
                    student_id=str(raw["student_id"]),
                    split=raw["split"],
                    profile=array(raw["profile"]),
                    behaviors=[array(b).reshape(len(b), -1) for b in raw["behaviors"]],
                    histories=[array(h) for h in raw["histories"]],
                    raw_histories=[array(h) for h in raw["raw_histories"]],
                    course_features=[array(v) for v in raw["course_features"]],
                    labels=array(raw["labels"]),
                    raw_labels=array(raw["raw_labels"]),
                )
                for raw in payload["samples"]
            ]
            scalers = {name: Scaler.from_dict(s) for name, s in payload["scalers"].items()}
        except (KeyError, TypeError, ValueError) as e:
            raise DatasetFormatError(f"Dataset payload is malformed: {e}") from e
        return cls(
            samples=samples,
            scalers=scalers,
            vocabulary={k: list(v) for k, v in payload["vocabulary"].items()},
            metadata=dict(payload.get("metadata", {})),
        )


def split_students(
    student_ids: Sequence[str],
    validation_fraction: float,
    test_fraction: float,
    seed: int,
) -> Dict[str, str]:
    """Assign each student to train / validation / test by a seeded permutation."""
    ordered = sorted(student_ids)
    order = np.random.default_rng(seed).permutation(len(ordered))
    n_test = int(round(test_fraction * len(ordered)))
    n_val = int(round(validation_fraction * len(ordered)))
    assignment = {}
    for rank, index in enumerate(order):
        if rank < n_test:
            assignment[ordered[index]] = "test"
        elif rank < n_test + n_val:
            assignment[ordered[index]] = "validation"
        else:
            assignment[ordered[index]] = "train"
    return assignment


def build_vocabulary(students: Sequence[RawStudent], attribute_names: Sequence[str]) -> Dict[str, List[str]]:
    return {
        name: sorted({s.attributes[name] for s in students if name in s.attributes})
        for name in attribute_names
    }


def encode_profile(attributes: Mapping[str, str], vocabulary: Mapping[str, List[str]]) -> np.ndarray:
    """Concatenated one-hot per attribute; unknown or missing values encode as all zeros."""
    parts = []
    for name, values in vocabulary.items():
        block = np.zeros(len(values))
        value = attributes.get(name)
        if value in values:
            block[values.index(value)] = 1.0
        parts.append(block)
    return np.concatenate(parts) if parts else np.zeros(0)


def assemble_dataset(
    students: Sequence[RawStudent],
    assignment: Mapping[str, str],
    attribute_names: Sequence[str],
    metadata: Optional[Dict[str, Any]] = None,
) -> Dataset:
    """Fit vocabulary and scalers on the train split and scale every student."""
    train = [s for s in students if assignment.get(s.student_id) == "train"]
    if not train:
        raise ScalerError("No training students to fit scalers on.")

    vocabulary = build_vocabulary(train, attribute_names)
    scalers: Dict[str, Scaler] = {
        "library": fit_scaler(np.concatenate([s.behavior.library_days for s in train]), "unit_interval"),
    }

    task_count = len(TASK_NAMES)
    for n, task in enumerate(TASK_NAMES):
        labels = [s.labels[n] for s in train if s.labels is not None]
        history_values = np.concatenate([s.histories[n] for s in train] + [np.asarray(labels)])
        scalers[f"history_{task}"] = fit_scaler(
            history_values if history_values.size else np.zeros(1), "unit_interval"
        )
        if labels:
            scalers[f"label_{task}"] = fit_scaler(labels, "symmetric_unit")
        rows = [s.course_features[n] for s in train if s.course_features[n] is not None]
        if rows:
            scalers[f"course_{task}"] = fit_scaler(np.stack(rows), "unit_interval")

    samples = []
    for student in students:
        histories = [scalers[f"history_{task}"].apply(student.histories[n]) if student.histories[n].size
                     else np.zeros(0) for n, task in enumerate(TASK_NAMES)]
        course_features = []
        for n, task in enumerate(TASK_NAMES):
            row = student.course_features[n]
            course_features.append(None if row is None else scalers[f"course_{task}"].apply(row))
        labels = None
        if student.labels is not None:
            labels = np.array([
                scalers[f"label_{task}"].apply(student.labels[n]) for n, task in enumerate(TASK_NAMES)
            ], dtype=np.float64).reshape(task_count)
        samples.append(TaskSample(
            student_id=student.student_id,
            split=assignment.get(student.student_id, "train"),
            profile=encode_profile(student.attributes, vocabulary),
            behaviors=[
                scalers["library"].apply(student.behavior.library_days),
                student.behavior.dormitory_days.astype(np.float64),
            ],
            histories=histories,
            raw_histories=[np.asarray(h, dtype=np.float64) for h in student.histories],
            course_features=course_features,
            labels=labels,
            raw_labels=None if student.labels is None else np.asarray(student.labels, dtype=np.float64),
        ))

    counts = {name: sum(1 for s in samples if s.split == name) for name in SPLITS}
    logger.info(
        f"Assembled dataset of {len(samples)} students",
        extra={"extra_data": {"splits": counts, "profile_dim": sum(len(v) for v in vocabulary.values())}},
    )
    return Dataset(samples=samples, scalers=scalers, vocabulary=vocabulary, metadata=metadata or {})
