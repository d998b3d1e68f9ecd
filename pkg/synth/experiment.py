"""
Multi-seed comparison of the full model against its variants.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from data.dataset import Dataset, TaskSample
from errors import DataError, ModelError
from models import TASK_NAMES, ModelConfig, TrainConfig
from synth.baselines import ModelBuilder, build_ablation
from training.stats import relative_improvement, unpaired_ttest
from utils.logger import ExecutionTimer

logger = logging.getLogger(__name__)

REFERENCE = "full"


@dataclass
class ModelSummary:
    kind: str
    mse_per_seed: List[Dict[str, float]] = field(default_factory=list)

    @property
    def mean_mse(self) -> Dict[str, float]:
        return {task: float(np.mean([row[task] for row in self.mse_per_seed])) for task in TASK_NAMES}


@dataclass
class Comparison:
    variant: str
    relative_improvement: Dict[str, float]
    p_values: Dict[str, float]
    statistics: Dict[str, float]
    wins: int                                   # seeds where full beats the variant on >= 2 tasks


@dataclass
class ExperimentReport:
    seeds: List[int]
    models: Dict[str, ModelSummary]
    comparisons: Dict[str, Comparison]

    def to_dict(self) -> Dict:
        return {
            "seeds": list(self.seeds),
            "reference": REFERENCE,
            "models": {
                kind: {"mean_mse": summary.mean_mse, "mse_per_seed": summary.mse_per_seed}
                for kind, summary in self.models.items()
            },
            "comparisons": {
                kind: {
                    "relative_improvement": c.relative_improvement,
                    "p_values": c.p_values,
                    "t_statistics": c.statistics,
                    "wins": c.wins,
                }
                for kind, c in self.comparisons.items()
            },
        }

    def to_frame(self) -> pd.DataFrame:
        """One row per model: mean MSE, relative improvement and p-value per task."""
        rows = []
        for kind, summary in self.models.items():
            row: Dict[str, object] = {"model": kind}
            comparison = self.comparisons.get(kind)
            for task in TASK_NAMES:
                row[f"mse_{task}"] = summary.mean_mse[task]
                row[f"improvement_{task}"] = comparison.relative_improvement[task] if comparison else np.nan
                row[f"p_{task}"] = comparison.p_values[task] if comparison else np.nan
            row["wins"] = comparison.wins if comparison else np.nan
            rows.append(row)
        return pd.DataFrame(rows)


def _test_split(dataset: Dataset) -> List[TaskSample]:
    test = dataset.split("test")
    if not test:
        raise DataError("Experiment needs a non-empty test split.")
    if any(s.raw_labels is None for s in test):
        raise DataError("Every test student needs labels.")
    return test


def run_experiment(
    dataset: Dataset,
    builders: Sequence[ModelBuilder],
    train_config: TrainConfig,
    seeds: Sequence[int],
) -> ExperimentReport:
    """
    Train every builder once per seed and compare each to the full model.

    Relative improvements use the seed-averaged MSE; t-tests run on the
    per-student squared errors pooled across seeds.
    """
    kinds = [b.kind for b in builders]
    if REFERENCE not in kinds:
        raise ModelError(f"run_experiment needs a '{REFERENCE}' builder, got {kinds}")
    if len(set(kinds)) != len(kinds):
        raise ModelError(f"Duplicate builders in {kinds}")
    if not seeds:
        raise ModelError("run_experiment needs at least one seed")

    test = _test_split(dataset)
    labels = np.stack([s.raw_labels for s in test])
    summaries = {kind: ModelSummary(kind) for kind in kinds}
    errors: Dict[str, List[np.ndarray]] = {kind: [] for kind in kinds}

    for seed in seeds:
        seeded = train_config.model_copy(update={"seed": int(seed)})
        for builder in builders:
            with ExecutionTimer(logger, f"{builder.kind} seed {seed}"):
                model = builder.fit(dataset, seeded)
                squared = (model.predict(test) - labels) ** 2
            errors[builder.kind].append(squared)
            summaries[builder.kind].mse_per_seed.append(
                {task: float(np.mean(squared[:, n])) for n, task in enumerate(TASK_NAMES)}
            )

    reference = summaries[REFERENCE]
    comparisons = {}
    for kind in kinds:
        pooled_variant = np.concatenate(errors[kind])
        pooled_full = np.concatenate(errors[REFERENCE])
        improvement, p_values, statistics = {}, {}, {}
        for n, task in enumerate(TASK_NAMES):
            improvement[task] = relative_improvement(summaries[kind].mean_mse[task], reference.mean_mse[task])
            result = unpaired_ttest(pooled_full[:, n], pooled_variant[:, n])
            p_values[task] = result.p_value
            statistics[task] = result.statistic
        wins = sum(
            1 for full_row, variant_row in zip(reference.mse_per_seed, summaries[kind].mse_per_seed)
            if sum(full_row[t] < variant_row[t] for t in TASK_NAMES) >= 2
        )
        comparisons[kind] = Comparison(kind, improvement, p_values, statistics, wins)
        logger.info(
            f"{kind}: mean MSE {summaries[kind].mean_mse}",
            extra={"extra_data": {"relative_improvement": improvement, "p_values": p_values, "wins": wins}},
        )

    return ExperimentReport(seeds=[int(s) for s in seeds], models=summaries, comparisons=comparisons)


def default_builders(config: Optional[ModelConfig] = None, include_ha: bool = True) -> List[ModelBuilder]:
    kinds = ["full", "single_task", "standard_lstm_gates", "no_soft_attention", "history_only_lstm"]
    if include_ha:
        kinds.append("ha")
    return [build_ablation(kind, config) for kind in kinds]


@dataclass
class SweepReport:
    counts: List[int]
    seeds: List[int]
    mean_mse: Dict[int, Dict[str, float]]

    def to_dict(self) -> Dict:
        return {
            "seeds": self.seeds,
            "units": {str(count): mse for count, mse in self.mean_mse.items()},
        }

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [{"num_units": count, **{f"mse_{t}": mse[t] for t in TASK_NAMES}}
             for count, mse in self.mean_mse.items()]
        )


def sweep_units(
    dataset: Dataset,
    counts: Sequence[int],
    model_config: ModelConfig,
    train_config: TrainConfig,
    seeds: Sequence[int],
) -> SweepReport:
    """Mean test MSE of the full model for each number of interaction units."""
    if not counts or any(c < 1 for c in counts):
        raise ModelError(f"Unit counts must be positive, got {list(counts)}")
    if not seeds:
        raise ModelError("sweep_units needs at least one seed")
    test = _test_split(dataset)
    labels = np.stack([s.raw_labels for s in test])

    mean_mse = {}
    for count in counts:
        builder = build_ablation(REFERENCE, model_config.model_copy(update={"num_units": int(count)}))
        per_seed = []
        for seed in seeds:
            model = builder.fit(dataset, train_config.model_copy(update={"seed": int(seed)}))
            per_seed.append(np.mean((model.predict(test) - labels) ** 2, axis=0))
        mean_mse[int(count)] = {task: float(v) for task, v in zip(TASK_NAMES, np.mean(per_seed, axis=0))}
        logger.info(f"{count} units: mean MSE {mean_mse[int(count)]}")
    return SweepReport(counts=[int(c) for c in counts], seeds=[int(s) for s in seeds], mean_mse=mean_mse)
