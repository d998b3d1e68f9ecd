import numpy as np
import pytest

from autograd import PRIMITIVES, gradient_check, leaf, relative_error, scale, sum_of_squares, tanh
from autograd.engine import Primitive
from errors import GradientCheckError
from graph.state import ParameterStore
from training.trainer import check_gradients


def test_relative_error_floor():
    assert relative_error(0.0, 0.0) == 0.0
    assert relative_error(1.0, 1.0) == 0.0
    assert relative_error(2.0, 1.0) == pytest.approx(0.5)
    assert relative_error(1e-12, 0.0) == pytest.approx(1e-4)
    assert relative_error(1e-9, 0.0) == pytest.approx(0.1)
    assert relative_error(1e-6, 0.0) == pytest.approx(1.0)


@pytest.mark.parametrize("variant", [
    {},
    {"pooling": "mean"},
    {"profile_gates": False},
    {"history_only": True},
    {"isolate_task": 1, "balance_weights": [0.0, 1.0, 0.0]},
    {"fc_activation": "tanh"},
    {"use_course_features": False},
])
def test_full_model_gradients(tiny_dataset, tiny_model_config, variant):
    config = tiny_model_config.model_copy(update=variant)
    overall, per_param = check_gradients(tiny_dataset.samples[:3], config)
    assert overall < 1e-4
    assert set(per_param) >= {"head.wag.W", "trend.books.W_ih"}


def test_detects_a_wrong_vjp(monkeypatch, rng):
    broken = Primitive(
        "tanh",
        PRIMITIVES["tanh"].forward,
        lambda g, v, out, attrs: [g * (1.0 - out)],
        PRIMITIVES["tanh"].check,
    )
    monkeypatch.setitem(PRIMITIVES, "tanh", broken)
    params = ParameterStore({"x": rng.normal(size=5)})
    overall, _ = gradient_check(lambda p: sum_of_squares(tanh(p["x"])), params)
    assert overall > 1e-2


def test_restores_parameters(rng):
    values = rng.normal(size=(2, 3))
    params = ParameterStore({"x": values})
    gradient_check(lambda p: sum_of_squares(tanh(p["x"])), params)
    assert np.array_equal(params["x"], values)


def test_non_finite_loss_is_reported():
    class Source:
        def items(self):
            return iter([("x", np.array([1.0]))])

        def bind(self):
            return {"x": leaf([1.0])}

    with pytest.raises(GradientCheckError):
        gradient_check(lambda p: scale(p["x"], float("nan")), Source())
