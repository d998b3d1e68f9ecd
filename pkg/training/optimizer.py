"""Bias-corrected Adam."""

from dataclasses import dataclass, field
from typing import Dict, Mapping

import numpy as np

from errors import MissingGradientError, TrainingError
from graph.state import ParameterStore
from models import TrainConfig


@dataclass
class AdamState:
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    @classmethod
    def create(cls, params: ParameterStore) -> "AdamState":
        return cls(
            first_moment={name: np.zeros_like(params[name]) for name in params.trainable()},
            second_moment={name: np.zeros_like(params[name]) for name in params.trainable()},
        )


def adam_step(
    params: ParameterStore,
    gradients: Mapping[str, np.ndarray],
    state: AdamState,
    config: TrainConfig,
) -> AdamState:
    """Update every trainable parameter in place; frozen parameters are skipped."""
    trainable = params.trainable()
    for name in trainable:
        if name not in gradients:
            raise MissingGradientError(name)
        if np.shape(gradients[name]) != params[name].shape:
            raise TrainingError(
                f"Gradient for '{name}' has shape {np.shape(gradients[name])}, "
                f"parameter has {params[name].shape}"
            )

    state.step += 1
    b1, b2 = config.beta1, config.beta2
    correction1 = 1.0 - b1 ** state.step
    correction2 = 1.0 - b2 ** state.step
    for name in trainable:
        g = gradients[name]
        m = b1 * state.first_moment.get(name, np.zeros_like(g)) + (1.0 - b1) * g
        v = b2 * state.second_moment.get(name, np.zeros_like(g)) + (1.0 - b2) * g * g
        state.first_moment[name] = m
        state.second_moment[name] = v
        m_hat = m / correction1
        v_hat = v / correction2
        params[name] = params[name] - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)
    return state
