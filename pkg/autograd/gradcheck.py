"""Finite-difference verification of the analytic gradients."""

import logging
from typing import Callable, Dict, Iterator, Mapping, Protocol, Tuple

import numpy as np

from autograd.engine import GraphNode, backward
from errors import GradientCheckError, NonFiniteValueError

logger = logging.getLogger(__name__)


class ParameterSource(Protocol):
    def items(self) -> Iterator[Tuple[str, np.ndarray]]: ...

    def bind(self) -> Dict[str, GraphNode]: ...


LossBuilder = Callable[[Mapping[str, GraphNode]], GraphNode]


def _evaluate(build: LossBuilder, nodes: Mapping[str, GraphNode]) -> GraphNode:
    try:
        return build(nodes)
    except NonFiniteValueError as e:
        raise GradientCheckError(f"Loss is not finite: {e}") from e


def _scalar(node: GraphNode) -> float:
    value = float(node.value.reshape(-1)[0])
    if not np.isfinite(value):
        raise GradientCheckError(f"Loss evaluated to {value!r}")
    return value


def relative_error(analytic: float, numeric: float, floor: float = 1e-8) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def gradient_check(
    build: LossBuilder,
    params: ParameterSource,
    eps: float = 1e-5,
    floor: float = 1e-8,
) -> Tuple[float, Dict[str, float]]:
    """
    Compare backward() against central differences for every parameter entry.

    ``build`` receives freshly bound parameter leaves and must return the
    scalar loss. Parameters are perturbed in place and restored afterwards.

    Returns:
        (max relative error over all entries, max relative error per parameter)
    """
    nodes = params.bind()
    loss = _evaluate(build, nodes)
    _scalar(loss)
    table = backward(loss)

    per_parameter: Dict[str, float] = {}
    for name, array in params.items():
        node = nodes[name]
        analytic = table.get(node, np.zeros_like(array))
        worst = 0.0
        flat = array.reshape(-1)
        grad_flat = analytic.reshape(-1)
        for index in range(flat.size):
            original = flat[index]
            flat[index] = original + eps
            plus = _scalar(_evaluate(build, params.bind()))
            flat[index] = original - eps
            minus = _scalar(_evaluate(build, params.bind()))
            flat[index] = original
            numeric = (plus - minus) / (2.0 * eps)
            worst = max(worst, relative_error(float(grad_flat[index]), numeric, floor))
        per_parameter[name] = worst
        logger.debug(f"gradcheck {name}: max relative error {worst:.3e}")

    overall = max(per_parameter.values(), default=0.0)
    return overall, per_parameter
