"""
Mini-batch training, prediction and evaluation.

One training run owns its ParameterStore: every mini-batch binds fresh
leaves, runs the forward pass in train mode, sums the weighted task losses,
backpropagates and takes one Adam step.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from autograd import backward, gradient_check, release_graph
from data.dataset import Dataset, TaskSample
from data.scaling import Scaler
from errors import NonFiniteLossError, NonFiniteValueError, ScalerError, TrainingError
from graph.state import ParameterStore
from graph.workflow import (
    forward,
    init_parameters,
    make_batch,
    predict_scaled,
    resolve_model_config,
    task_names,
)
from models import ModelConfig, TrainConfig
from training.losses import task_losses, total_loss
from training.optimizer import AdamState, adam_step

logger = logging.getLogger(__name__)


@dataclass
class EpochRecord:
    epoch: int
    losses: List[float]
    total: float
    val_total: Optional[float] = None


@dataclass
class TrainResult:
    params: ParameterStore
    config: ModelConfig
    history: List[EpochRecord] = field(default_factory=list)
    best_epoch: Optional[int] = None


@dataclass
class Predictions:
    student_ids: List[str]
    scaled: np.ndarray       # (students, tasks) in [-1, 1]
    values: np.ndarray       # (students, tasks) in original units


@dataclass
class EvaluationReport:
    mse: Dict[str, float]
    students: int
    split: Optional[str] = None

    def to_dict(self) -> Dict:
        return {"split": self.split, "students": self.students, "mse": dict(self.mse)}


def _balance_weights(model_config: ModelConfig, train_config: TrainConfig) -> List[float]:
    weights = train_config.balance_weights or model_config.balance_weights
    if len(weights) != model_config.task_count:
        raise TrainingError(
            f"{len(weights)} balance weights for {model_config.task_count} tasks"
        )
    return list(weights)


def _labels(samples: Sequence[TaskSample]) -> np.ndarray:
    missing = [s.student_id for s in samples if s.labels is None]
    if missing:
        raise TrainingError(f"Students without labels: {', '.join(missing[:5])}")
    return np.stack([s.labels for s in samples])


def scaled_total_loss(
    params: ParameterStore,
    samples: Sequence[TaskSample],
    config: ModelConfig,
    balance_weights: Sequence[float],
) -> float:
    """Eval-mode weighted loss in scaled space, summed in fixed sample order."""
    predictions = predict_scaled(params, samples, config)
    per_task = np.mean((_labels(samples) - predictions) ** 2, axis=0)
    return float(np.dot(balance_weights, per_task))


def train(
    dataset: Dataset,
    model_config: ModelConfig,
    train_config: TrainConfig,
    on_epoch: Optional[Callable[[EpochRecord], None]] = None,
) -> TrainResult:
    """
    Train on the dataset's train split.

    Deterministic given ``train_config.seed``: initialization, shuffling and
    dropout masks all draw from one generator. When a validation split exists
    and ``keep_best`` is set, the parameters of the best validation epoch are
    returned.
    """
    config = resolve_model_config(model_config, dataset)
    weights = _balance_weights(config, train_config)
    samples = dataset.split("train")
    if not samples:
        raise TrainingError("Dataset has no training students.")
    _labels(samples)
    validation = dataset.split("validation")

    rng = np.random.default_rng(train_config.seed)
    params = init_parameters(config, rng)
    state = AdamState.create(params)
    result = TrainResult(params=params, config=config)
    best_params: Optional[ParameterStore] = None
    best_val = np.inf

    logger.info(
        f"Training on {len(samples)} students for {train_config.epochs} epochs",
        extra={"extra_data": {"parameters": params.size, "seed": train_config.seed,
                              "validation_students": len(validation)}},
    )

    for epoch in range(1, train_config.epochs + 1):
        order = rng.permutation(len(samples))
        loss_sums = np.zeros(config.task_count)
        for batch_index, start in enumerate(range(0, len(samples), train_config.batch_size)):
            batch = [samples[i] for i in order[start:start + train_config.batch_size]]
            nodes = params.bind()
            try:
                output = forward(batch, nodes, config, mode="train", rng=rng)
                losses = task_losses(output.predictions, _labels(batch))
                total = total_loss(losses, weights)
            except NonFiniteValueError as e:
                raise NonFiniteLossError(epoch, batch_index, float("nan")) from e
            value = float(total.value)
            if not np.isfinite(value):
                raise NonFiniteLossError(epoch, batch_index, value)

            table = backward(total)
            gradients = {name: table[nodes[name]] for name in params.trainable() if nodes[name] in table}
            adam_step(params, gradients, state, train_config)
            release_graph(total)
            loss_sums += np.array([float(loss.value) for loss in losses]) * len(batch)

        epoch_losses = loss_sums / len(samples)
        record = EpochRecord(
            epoch=epoch,
            losses=epoch_losses.tolist(),
            total=float(np.dot(weights, epoch_losses)),
        )
        if validation:
            record.val_total = scaled_total_loss(params, validation, config, weights)
            if train_config.keep_best and record.val_total < best_val:
                best_val = record.val_total
                best_params = params.copy()
                result.best_epoch = epoch
        result.history.append(record)

        logger.info(
            f"Epoch {epoch}/{train_config.epochs}: total {record.total:.5f}",
            extra={"extra_data": {"epoch": epoch, "losses": record.losses,
                                  "total": record.total, "val_total": record.val_total}},
        )
        if on_epoch is not None:
            on_epoch(record)

    if best_params is not None:
        result.params = best_params
        logger.info(f"Keeping parameters from epoch {result.best_epoch} (validation {best_val:.5f})")
    return result


def label_scalers(scalers: Mapping[str, Scaler], config: ModelConfig) -> List[Scaler]:
    found = []
    for task in task_names(config):
        key = f"label_{task}"
        if key not in scalers:
            raise ScalerError(f"No label scaler '{key}' for task {task}")
        found.append(scalers[key])
    return found


def descale(scaled: np.ndarray, scalers: Mapping[str, Scaler], config: ModelConfig) -> np.ndarray:
    columns = [scaler.invert(scaled[:, n]) for n, scaler in enumerate(label_scalers(scalers, config))]
    return np.stack(columns, axis=1) if columns else np.zeros_like(scaled)


def predict(
    params: ParameterStore,
    samples: Sequence[TaskSample],
    scalers: Mapping[str, Scaler],
    config: ModelConfig,
    batch_size: int = 256,
) -> Predictions:
    """Eval-mode predictions de-scaled to original units."""
    scaled = predict_scaled(params, samples, config, batch_size)
    return Predictions(
        student_ids=[s.student_id for s in samples],
        scaled=scaled,
        values=descale(scaled, scalers, config),
    )


def squared_errors(
    predictions_scaled: np.ndarray,
    labels_scaled: np.ndarray,
    scalers: Mapping[str, Scaler],
    config: ModelConfig,
) -> np.ndarray:
    """Per-student, per-task squared error after de-scaling both sides."""
    predictions_scaled = np.asarray(predictions_scaled, dtype=np.float64)
    labels_scaled = np.asarray(labels_scaled, dtype=np.float64)
    if predictions_scaled.shape != labels_scaled.shape:
        raise ScalerError(
            f"Predictions {predictions_scaled.shape} and labels {labels_scaled.shape} differ in shape"
        )
    return (descale(predictions_scaled, scalers, config) - descale(labels_scaled, scalers, config)) ** 2


def evaluate(
    params: ParameterStore,
    samples: Sequence[TaskSample],
    scalers: Mapping[str, Scaler],
    config: ModelConfig,
    split: Optional[str] = None,
    batch_size: int = 256,
) -> EvaluationReport:
    """Per-task MSE in original units."""
    if not samples:
        raise TrainingError("Nothing to evaluate: no students selected.")
    scaled = predict_scaled(params, samples, config, batch_size)
    errors = squared_errors(scaled, _labels(samples), scalers, config)
    mse = {task: float(np.mean(errors[:, n])) for n, task in enumerate(task_names(config))}
    logger.info("Evaluation finished", extra={"extra_data": {"mse": mse, "students": len(samples)}})
    return EvaluationReport(mse=mse, students=len(samples), split=split)


def check_gradients(
    samples: Sequence[TaskSample],
    config: ModelConfig,
    balance_weights: Optional[Sequence[float]] = None,
    eps: float = 1e-5,
    seed: int = 0,
) -> Tuple[float, Dict[str, float]]:
    """
    Finite-difference check of the full weighted loss over every parameter.

    ``config`` must already carry the dataset's input widths; dropout is
    disabled so the loss is a deterministic function of the parameters.
    """
    config = config.model_copy(update={"dropout_rate": 0.0})
    params = init_parameters(config, np.random.default_rng(seed))
    batch = make_batch(samples, config)
    labels = _labels(samples)
    weights = list(balance_weights or config.balance_weights)

    def build(nodes):
        return total_loss(task_losses(forward(batch, nodes, config).predictions, labels), weights)

    overall, per_param = gradient_check(build, params, eps=eps)
    logger.info(
        f"Gradient check over {params.size} entries: max relative error {overall:.3e}",
        extra={"extra_data": {"max_relative_error": overall}},
    )
    return overall, per_param
