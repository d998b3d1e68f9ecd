"""Multi-task mean squared error."""

from typing import List, Sequence, Union

import numpy as np

from autograd import GraphNode, add_n, constant, scale, sum_of_squares, take
from errors import TrainingError


def _node(value: Union[GraphNode, np.ndarray, Sequence]) -> GraphNode:
    return value if isinstance(value, GraphNode) else constant(np.asarray(value, dtype=np.float64))


def task_losses(predictions, labels) -> List[GraphNode]:
    """
    L_n = mean over the batch of (y_n - y_hat_n)^2.

    ``predictions`` and ``labels`` are (batch, tasks); a 1-D input is one task.
    """
    predictions = _node(predictions)
    labels = _node(labels)
    if labels.shape != predictions.shape or predictions.value.ndim not in (1, 2):
        raise TrainingError(f"predictions {predictions.shape} and labels {labels.shape} do not match")
    batch = predictions.shape[0]
    if batch == 0:
        raise TrainingError("task_losses needs at least one sample")
    if predictions.value.ndim == 1:
        return [scale(sum_of_squares(predictions - labels), 1.0 / batch)]

    losses = []
    for n in range(predictions.shape[1]):
        residual = take(predictions, n, n + 1) - take(labels, n, n + 1)
        losses.append(scale(sum_of_squares(residual), 1.0 / batch))
    return losses


def total_loss(losses: Sequence[GraphNode], balance_weights: Sequence[float]) -> GraphNode:
    """Sum of lambda_n * L_n."""
    if len(losses) != len(balance_weights):
        raise TrainingError(
            f"{len(losses)} task losses but {len(balance_weights)} balance weights"
        )
    return add_n([scale(_node(loss), weight) for loss, weight in zip(losses, balance_weights)])
