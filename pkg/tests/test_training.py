import numpy as np
import pytest

from autograd import constant, leaf
from errors import MissingGradientError, NonFiniteLossError, NonFiniteValueError, TrainingError
from graph.state import ParameterStore
from graph.workflow import init_parameters
from models import TrainConfig
from training.losses import task_losses, total_loss
from training.optimizer import AdamState, adam_step
from training.trainer import descale, evaluate, predict, scaled_total_loss, squared_errors, train


def test_task_losses():
    predictions = np.array([[0.5, 0.0, -0.5], [0.1, 0.2, 0.3]])
    labels = np.array([[0.0, 0.0, 0.0], [0.1, -0.2, 0.3]])
    losses = task_losses(constant(predictions), labels)
    assert [float(loss.value) for loss in losses] == pytest.approx([0.125, 0.08, 0.125])

    total = total_loss(losses, [1.0, 2.0, 0.0])
    assert float(total.value) == pytest.approx(0.285)

    single = task_losses([0.5, 0.5], [0.0, 1.0])
    assert len(single) == 1 and float(single[0].value) == pytest.approx(0.25)


def test_loss_errors():
    with pytest.raises(TrainingError):
        task_losses(np.zeros((2, 3)), np.zeros((2, 2)))
    with pytest.raises(TrainingError):
        task_losses(np.zeros((0, 3)), np.zeros((0, 3)))
    with pytest.raises(TrainingError):
        total_loss(task_losses(np.zeros((2, 3)), np.ones((2, 3))), [1.0, 1.0])


def test_adam_requires_every_gradient():
    params = ParameterStore({"a": np.zeros(2), "b": np.zeros(3)})
    with pytest.raises(MissingGradientError) as info:
        adam_step(params, {"a": np.ones(2)}, AdamState.create(params), TrainConfig())
    assert info.value.name == "b"
    with pytest.raises(TrainingError):
        adam_step(params, {"a": np.ones(2), "b": np.ones(2)}, AdamState.create(params), TrainConfig())


def test_training_is_deterministic(tiny_dataset, tiny_model_config, fast_train_config):
    first = train(tiny_dataset, tiny_model_config, fast_train_config)
    second = train(tiny_dataset, tiny_model_config, fast_train_config)
    assert first.params.equals(second.params)
    assert [r.total for r in first.history] == [r.total for r in second.history]

    other = train(tiny_dataset, tiny_model_config, fast_train_config.model_copy(update={"seed": 4}))
    assert not other.params.equals(first.params)


def test_epoch_records(tiny_dataset, tiny_model_config, fast_train_config):
    seen = []
    result = train(tiny_dataset, tiny_model_config, fast_train_config, on_epoch=seen.append)
    assert [r.epoch for r in result.history] == [1, 2]
    assert seen == result.history
    for record in result.history:
        assert len(record.losses) == 3
        assert record.total == pytest.approx(sum(record.losses))
        assert record.val_total is not None
    assert result.best_epoch in (1, 2)
    best = min(result.history, key=lambda r: r.val_total)
    assert result.best_epoch == best.epoch

    validation = tiny_dataset.split("validation")
    assert scaled_total_loss(result.params, validation, result.config, [1.0, 1.0, 1.0]) == pytest.approx(
        best.val_total
    )


def test_dropout_training_runs(tiny_dataset, tiny_model_config, fast_train_config):
    config = tiny_model_config.model_copy(update={"dropout_rate": 0.4})
    first = train(tiny_dataset, config, fast_train_config)
    second = train(tiny_dataset, config, fast_train_config)
    assert first.params.equals(second.params)


def test_isolated_training_leaves_frozen_parameters(tiny_dataset, tiny_model_config, fast_train_config):
    config = tiny_model_config.model_copy(update={"isolate_task": 0, "balance_weights": [1.0, 0.0, 0.0]})
    result = train(tiny_dataset, config, fast_train_config.model_copy(update={"keep_best": False}))

    initial = init_parameters(result.config, np.random.default_rng(fast_train_config.seed))
    for name in result.params.frozen:
        assert np.array_equal(result.params[name], initial[name])
    assert not np.array_equal(result.params["head.wag.W"], initial["head.wag.W"])


def test_standard_gate_weights_stay_zero(tiny_dataset, tiny_model_config, fast_train_config):
    config = tiny_model_config.model_copy(update={"profile_gates": False})
    result = train(tiny_dataset, config, fast_train_config)
    assert np.all(result.params["plstm.dormitory.W_oD"] == 0.0)
    assert np.all(result.params["attention.W_a2"] == 0.0)


def test_non_finite_loss_stops_training(tiny_dataset, tiny_model_config, fast_train_config, mocker):
    mocker.patch("training.trainer.task_losses", side_effect=NonFiniteValueError("tanh"))
    with pytest.raises(NonFiniteLossError) as info:
        train(tiny_dataset, tiny_model_config, fast_train_config)
    assert info.value.epoch == 1
    assert info.value.batch_index == 0


def test_nan_total_stops_training(tiny_dataset, tiny_model_config, fast_train_config, mocker):
    mocker.patch("training.trainer.total_loss", return_value=leaf(np.array(np.nan)))
    with pytest.raises(NonFiniteLossError):
        train(tiny_dataset, tiny_model_config, fast_train_config)


def test_training_needs_a_train_split(tiny_dataset, tiny_model_config, fast_train_config):
    for sample in tiny_dataset.samples:
        sample.split = "test"
    with pytest.raises(TrainingError):
        train(tiny_dataset, tiny_model_config, fast_train_config)


def test_predict_and_evaluate(tiny_dataset, tiny_model_config, fast_train_config):
    result = train(tiny_dataset, tiny_model_config, fast_train_config)
    test = tiny_dataset.split("test")
    predictions = predict(result.params, test, tiny_dataset.scalers, result.config)

    assert predictions.student_ids == [s.student_id for s in test]
    assert np.allclose(predictions.values, descale(predictions.scaled, tiny_dataset.scalers, result.config))

    report = evaluate(result.params, test, tiny_dataset.scalers, result.config, split="test")
    raw = np.stack([s.raw_labels for s in test])
    expected = np.mean((predictions.values - raw) ** 2, axis=0)
    assert [report.mse[task] for task in ("wag", "books", "fails")] == pytest.approx(expected.tolist())
    assert report.to_dict()["students"] == len(test)

    with pytest.raises(TrainingError):
        evaluate(result.params, [], tiny_dataset.scalers, result.config)


def test_evaluation_does_not_depend_on_batching(tiny_dataset, tiny_model_config):
    params = init_parameters(tiny_model_config, np.random.default_rng(11))
    samples = tiny_dataset.samples
    reports = [
        evaluate(params, samples, tiny_dataset.scalers, tiny_model_config, batch_size=size)
        for size in (1, 7, len(samples))
    ]
    for report in reports[1:]:
        for task, mse in reports[0].mse.items():
            assert abs(report.mse[task] - mse) < 1e-12 * max(1.0, mse)


def test_squared_errors_are_in_original_units(tiny_dataset, tiny_model_config):
    samples = tiny_dataset.split("train")
    labels = np.stack([s.labels for s in samples])
    errors = squared_errors(labels, labels, tiny_dataset.scalers, tiny_model_config)
    assert np.allclose(errors, 0.0)

    shifted = squared_errors(labels + 0.1, labels, tiny_dataset.scalers, tiny_model_config)
    wag = tiny_dataset.label_scaler(0)
    half_span = (wag.maximum[0] - wag.minimum[0]) / 2
    assert np.allclose(shifted[:, 0], (0.1 * half_span) ** 2)


@pytest.mark.slow
def test_overfits_a_small_sample(tiny_dataset, tiny_model_config):
    chosen = {s.student_id for s in tiny_dataset.samples[:10]}
    for sample in tiny_dataset.samples:
        sample.split = "train" if sample.student_id in chosen else "test"
    config = TrainConfig(learning_rate=1e-2, epochs=500, batch_size=10, seed=1)
    result = train(tiny_dataset, tiny_model_config, config)
    assert result.history[-1].total < 0.01
