"""
Baseline and ablation model builders.

Every builder exposes ``fit(dataset, train_config)`` returning a model whose
``predict(samples)`` yields (students, tasks) predictions in original units,
so experiments treat the full model, its variants and the historical average
the same way.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Protocol, Sequence

import numpy as np

from data.dataset import Dataset, TaskSample
from data.scaling import Scaler
from errors import EmptyInputError, UnknownAblationError
from graph.state import ParameterStore
from models import ModelConfig, TrainConfig
from training.trainer import TrainResult, predict, train

logger = logging.getLogger(__name__)

ABLATION_KINDS = (
    "full",
    "single_task",
    "standard_lstm_gates",
    "no_soft_attention",
    "history_only_lstm",
    "ha",
)


class FittedModel(Protocol):
    kind: str

    def predict(self, samples: Sequence[TaskSample]) -> np.ndarray: ...


def baseline_ha(history: Sequence[float]) -> float:
    """Arithmetic mean of a historical label sequence."""
    values = np.asarray(history, dtype=np.float64)
    if values.size == 0:
        raise EmptyInputError("baseline_ha")
    return float(np.mean(values))


@dataclass
class HistoricalAverage:
    """Per-task historical average; students without history get the train label mean."""
    fallback: np.ndarray
    kind: str = "ha"

    @classmethod
    def fit(cls, dataset: Dataset) -> "HistoricalAverage":
        train = [s for s in dataset.split("train") if s.raw_labels is not None]
        if not train:
            raise EmptyInputError("HistoricalAverage.fit: no labeled training students")
        return cls(fallback=np.mean([s.raw_labels for s in train], axis=0))

    def predict(self, samples: Sequence[TaskSample]) -> np.ndarray:
        rows = []
        for sample in samples:
            rows.append([
                baseline_ha(history) if history.size else self.fallback[n]
                for n, history in enumerate(sample.raw_histories)
            ])
        return np.array(rows, dtype=np.float64).reshape(len(samples), self.fallback.size)


@dataclass
class DapamtModel:
    params: ParameterStore
    config: ModelConfig
    scalers: Dict[str, Scaler]
    kind: str = "full"
    result: Optional[TrainResult] = None

    def predict(self, samples: Sequence[TaskSample]) -> np.ndarray:
        return predict(self.params, samples, self.scalers, self.config).values


@dataclass
class SingleTaskEnsemble:
    """One isolated copy per task; column n comes from member n."""
    members: List[DapamtModel] = field(default_factory=list)
    kind: str = "single_task"

    def predict(self, samples: Sequence[TaskSample]) -> np.ndarray:
        columns = [member.predict(samples)[:, n] for n, member in enumerate(self.members)]
        return np.stack(columns, axis=1)


def variant_config(kind: str, config: ModelConfig) -> ModelConfig:
    """Model configuration of a single-network variant."""
    if kind == "full":
        return config
    if kind == "standard_lstm_gates":
        return config.model_copy(update={"profile_gates": False})
    if kind == "no_soft_attention":
        return config.model_copy(update={"pooling": "mean"})
    if kind == "history_only_lstm":
        return config.model_copy(update={"history_only": True})
    raise UnknownAblationError(kind)


@dataclass
class ModelBuilder:
    kind: str
    config: ModelConfig

    def fit(self, dataset: Dataset, train_config: TrainConfig) -> FittedModel:
        logger.info(f"Fitting '{self.kind}' (seed {train_config.seed})")
        if self.kind == "ha":
            return HistoricalAverage.fit(dataset)
        if self.kind == "single_task":
            members = []
            for n in range(self.config.task_count):
                weights = [1.0 if m == n else 0.0 for m in range(self.config.task_count)]
                config = self.config.model_copy(update={"isolate_task": n, "balance_weights": weights})
                result = train(dataset, config, train_config.model_copy(update={"balance_weights": weights}))
                members.append(DapamtModel(result.params, result.config, dataset.scalers,
                                           kind=f"single_task.{n}", result=result))
            return SingleTaskEnsemble(members=members)

        result = train(dataset, variant_config(self.kind, self.config), train_config)
        return DapamtModel(result.params, result.config, dataset.scalers, kind=self.kind, result=result)


def build_ablation(kind: str, config: Optional[ModelConfig] = None) -> ModelBuilder:
    if kind not in ABLATION_KINDS:
        raise UnknownAblationError(kind)
    return ModelBuilder(kind=kind, config=config or ModelConfig())
