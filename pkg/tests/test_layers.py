import numpy as np
import pytest

from autograd import constant, leaf
from graph.nodes import (
    GATES,
    interaction_unit,
    mean_pooling,
    output_head,
    plstm_step,
    run_plstm,
    soft_attention,
    trend_encode,
)
from graph.state import ParameterStore
from models import TrainConfig
from training.optimizer import AdamState, adam_step

INSTANCES = 20


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _plstm_gates(rng, behavior_dim, hidden, embed_dim):
    gates = {}
    for g in GATES:
        gates[f"W_{g}B"] = rng.normal(size=(hidden, behavior_dim))
        gates[f"W_{g}h"] = rng.normal(size=(hidden, hidden))
        gates[f"b_{g}"] = rng.normal(size=hidden)
        if g != "c":
            gates[f"W_{g}D"] = rng.normal(size=(hidden, embed_dim))
    return gates


def _plstm_reference(b, h, c, d, w):
    def gate(g):
        z = w[f"W_{g}B"] @ b + w[f"W_{g}h"] @ h + w[f"b_{g}"]
        return z + w[f"W_{g}D"] @ d if g != "c" else z

    i, f, o = _sigmoid(gate("i")), _sigmoid(gate("f")), _sigmoid(gate("o"))
    c_new = f * c + i * np.tanh(gate("c"))
    return o * np.tanh(c_new), c_new


def _leaves(arrays):
    return {name: leaf(value) for name, value in arrays.items()}


def test_plstm_step_matches_reference(rng):
    for _ in range(INSTANCES):
        weights = _plstm_gates(rng, 16, 12, 30)
        b, h, c, d = rng.random(16), rng.normal(size=12), rng.normal(size=12), rng.normal(size=30)
        h_new, c_new = plstm_step(constant(b), constant(h), constant(c), constant(d), _leaves(weights))
        h_ref, c_ref = _plstm_reference(b, h, c, d, weights)
        assert np.max(np.abs(h_new.value - h_ref)) < 1e-10
        assert np.max(np.abs(c_new.value - c_ref)) < 1e-10


def test_plstm_without_profile_drops_the_profile_terms(rng):
    weights = _plstm_gates(rng, 6, 4, 3)
    b, h, c = rng.random(6), rng.normal(size=4), rng.normal(size=4)
    without, _ = plstm_step(constant(b), constant(h), constant(c), None, _leaves(weights))
    zero, _ = plstm_step(constant(b), constant(h), constant(c), constant(np.zeros(3)), _leaves(weights))
    assert np.max(np.abs(without.value - zero.value)) < 1e-15


def test_batched_plstm_matches_rows(rng):
    weights = _plstm_gates(rng, 6, 4, 3)
    days = rng.random((3, 5, 6))
    profiles = rng.normal(size=(3, 3))
    batched = run_plstm(days, constant(profiles), _leaves(weights))
    assert len(batched) == 5
    for row in range(3):
        single = run_plstm(days[row], constant(profiles[row]), _leaves(weights))
        assert np.max(np.abs(batched[-1].value[row] - single[-1].value)) < 1e-12


def _trend_gates(rng, hidden):
    gates = {}
    for g in GATES:
        gates[f"W_{g}y"] = rng.normal(size=(hidden, 1))
        gates[f"W_{g}h"] = rng.normal(size=(hidden, hidden))
        gates[f"b_{g}"] = rng.normal(size=hidden)
    return gates


def _trend_reference(history, w):
    hidden = w["b_i"].size
    h, c = np.zeros(hidden), np.zeros(hidden)
    for y in history:
        def gate(g):
            return w[f"W_{g}y"] @ np.array([y]) + w[f"W_{g}h"] @ h + w[f"b_{g}"]
        i, f, o = _sigmoid(gate("i")), _sigmoid(gate("f")), _sigmoid(gate("o"))
        c = f * c + i * np.tanh(gate("c"))
        h = o * np.tanh(c)
    return h


def test_trend_encode_matches_reference(rng):
    for _ in range(INSTANCES):
        weights = _trend_gates(rng, 5)
        history = rng.random(int(rng.integers(1, 6)))
        out = trend_encode(history, _leaves(weights))
        assert np.max(np.abs(out.value - _trend_reference(history, weights))) < 1e-10


def test_trend_encode_masks_padding(rng):
    weights = _trend_gates(rng, 5)
    histories = [rng.random(3), rng.random(1), np.zeros(0)]
    padded = np.zeros((3, 3))
    mask = np.zeros((3, 3))
    for row, history in enumerate(histories):
        padded[row, :history.size] = history
        mask[row, :history.size] = 1.0

    out = trend_encode(padded, _leaves(weights), mask).value
    for row, history in enumerate(histories):
        assert np.max(np.abs(out[row] - _trend_reference(history, weights))) < 1e-10
    assert np.array_equal(out[2], np.zeros(5))


def test_empty_history_is_the_zero_state(rng):
    weights = _trend_gates(rng, 5)
    assert np.array_equal(trend_encode(np.zeros(0), _leaves(weights)).value, np.zeros(5))


def _attention_params(rng, hidden, embed_dim, width):
    return {
        "W_a0": rng.normal(size=(1, width)),
        "W_a1": rng.normal(size=(width, hidden)),
        "W_a2": rng.normal(size=(width, embed_dim)),
        "b_a": rng.normal(size=width),
    }


def test_soft_attention_matches_reference(rng):
    for _ in range(INSTANCES):
        w = _attention_params(rng, 4, 3, 6)
        states = rng.normal(size=(7, 4))
        d = rng.normal(size=3)
        alpha, pooled = soft_attention([constant(h) for h in states], constant(d), _leaves(w))

        scores = np.array([(w["W_a0"] @ np.tanh(w["W_a1"] @ h + w["W_a2"] @ d + w["b_a"]))[0] for h in states])
        expected = np.exp(scores - scores.max())
        expected /= expected.sum()
        assert np.all(alpha.value >= 0)
        assert abs(alpha.value.sum() - 1.0) < 1e-12
        assert np.max(np.abs(alpha.value - expected)) < 1e-10
        assert np.max(np.abs(pooled.value - expected @ states)) < 1e-10


def test_attention_weights_form_a_distribution(rng):
    for _ in range(100):
        w = _attention_params(rng, 5, 3, 4)
        states = rng.normal(size=(2, 9, 5)) * 3
        alpha, _ = soft_attention(
            [constant(states[:, x, :]) for x in range(9)], constant(rng.normal(size=(2, 3))), _leaves(w)
        )
        assert np.all(alpha.value >= 0)
        assert np.max(np.abs(alpha.value.sum(axis=1) - 1.0)) < 1e-9


def test_identical_states_get_uniform_attention(rng):
    w = _attention_params(rng, 4, 3, 6)
    state = rng.normal(size=4)
    alpha, pooled = soft_attention([constant(state)] * 5, constant(rng.normal(size=3)), _leaves(w))
    assert np.allclose(alpha.value, 0.2, atol=1e-12)
    assert np.allclose(pooled.value, state, atol=1e-12)


def test_mean_pooling(rng):
    states = rng.normal(size=(2, 4, 3))
    alpha, pooled = mean_pooling([constant(states[:, x, :]) for x in range(4)])
    assert alpha.shape == (2, 4)
    assert np.allclose(alpha.value, 0.25)
    assert np.allclose(pooled.value, states.mean(axis=1))


def _unit_params(rng, widths, fc_dim):
    return [
        {"W": rng.normal(size=(fc_dim, width)) * 0.5, "b": rng.normal(size=fc_dim) * 0.1,
         "slope": np.array([0.25])}
        for width in widths
    ]


def test_interaction_unit_matches_reference(rng):
    widths = (9, 6, 8)
    for _ in range(INSTANCES):
        unit = _unit_params(rng, widths, 5)
        inputs = [rng.normal(size=w) for w in widths]
        outputs, betas = interaction_unit([constant(x) for x in inputs], [_leaves(u) for u in unit])

        projected = []
        for x, u in zip(inputs, unit):
            z = u["W"] @ x + u["b"]
            projected.append(np.where(z > 0, z, 0.25 * z))
        reference_betas = {
            (i, j): _sigmoid(projected[i] @ projected[j]) for i in range(3) for j in range(i + 1, 3)
        }
        for pair, beta in betas.items():
            assert 0.0 < float(beta.value) < 1.0
            assert abs(float(beta.value) - reference_betas[pair]) < 1e-10
        for n in range(3):
            expected = projected[n] + sum(
                reference_betas[(min(n, m), max(n, m))] * projected[m] for m in range(3) if m != n
            )
            assert np.max(np.abs(outputs[n].value - expected)) < 1e-10


def test_isolated_task_receives_nothing_from_others(rng):
    unit = _unit_params(rng, (4, 4, 4), 3)
    inputs = [constant(rng.normal(size=(2, 4))) for _ in range(3)]
    outputs, _ = interaction_unit(inputs, [_leaves(u) for u in unit], isolate_task=1)

    z = inputs[1].value @ unit[1]["W"].T + unit[1]["b"]
    assert np.allclose(outputs[1].value, np.where(z > 0, z, 0.25 * z))


def test_output_head_is_bounded(rng):
    params = {"W": leaf(rng.normal(size=(1, 5)) * 10), "b": leaf(rng.normal(size=1))}
    out = output_head(constant(rng.normal(size=(4, 5)) * 10), params)
    assert out.shape == (4, 1)
    assert np.all(np.abs(out.value) <= 1.0)


def test_adam_step_matches_reference(rng):
    config = TrainConfig(learning_rate=0.01)
    start = rng.normal(size=(3, 2))
    params = ParameterStore({"w": start, "frozen": np.ones(2)}, frozen=["frozen"])
    state = AdamState.create(params)

    m = np.zeros_like(start)
    v = np.zeros_like(start)
    expected = start.copy()
    for step in range(1, 4):
        g = rng.normal(size=(3, 2))
        adam_step(params, {"w": g}, state, config)
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        m_hat = m / (1 - 0.9 ** step)
        v_hat = v / (1 - 0.999 ** step)
        expected = expected - 0.01 * m_hat / (np.sqrt(v_hat) + 1e-8)
        assert np.max(np.abs(params["w"] - expected)) < 1e-12

    assert state.step == 3
    assert np.array_equal(params["frozen"], np.ones(2))


def test_first_adam_step_moves_by_learning_rate(rng):
    params = ParameterStore({"w": np.zeros(4)})
    adam_step(params, {"w": np.array([3.0, -0.5, 2.0, -7.0])}, AdamState.create(params), TrainConfig(learning_rate=0.1))
    assert params["w"] == pytest.approx([-0.1, 0.1, -0.1, 0.1], rel=1e-6)


def test_zero_gradient_leaves_parameters_unchanged(rng):
    start = rng.normal(size=(2, 3))
    params = ParameterStore({"w": start})
    adam_step(params, {"w": np.zeros((2, 3))}, AdamState.create(params), TrainConfig())
    assert np.array_equal(params["w"], start)


def test_adam_step_decreases_a_convex_quadratic():
    target = np.array([0.5, -1.0, 2.0])
    params = ParameterStore({"w": np.array([1.5, -2.0, 0.7])})

    def objective(w):
        return float(np.sum((w - target) ** 2))

    before = objective(params["w"])
    adam_step(params, {"w": 2.0 * (params["w"] - target)}, AdamState.create(params), TrainConfig(learning_rate=0.05))
    assert objective(params["w"]) < before
