import numpy as np
import pytest

from errors import DataError, ModelError
from models import ModelConfig, SynthConfig, TrainConfig
from synth.baselines import build_ablation
from synth.experiment import default_builders, run_experiment, sweep_units
from synth.generator import generate


@pytest.fixture
def builders(tiny_model_config):
    return [build_ablation(kind, tiny_model_config) for kind in ("full", "no_soft_attention", "ha")]


def test_small_experiment(tiny_dataset, builders, fast_train_config):
    report = run_experiment(tiny_dataset, builders, fast_train_config, seeds=[0, 1])

    assert report.seeds == [0, 1]
    assert list(report.models) == ["full", "no_soft_attention", "ha"]
    for summary in report.models.values():
        assert len(summary.mse_per_seed) == 2
        assert all(value >= 0 for value in summary.mean_mse.values())
    assert report.models["ha"].mse_per_seed[0] == report.models["ha"].mse_per_seed[1]

    itself = report.comparisons["full"]
    assert all(value == 0.0 for value in itself.relative_improvement.values())
    assert all(p == pytest.approx(1.0) for p in itself.p_values.values())
    assert itself.wins == 0

    for comparison in report.comparisons.values():
        assert all(0.0 <= p <= 1.0 for p in comparison.p_values.values())
        assert 0 <= comparison.wins <= 2

    frame = report.to_frame()
    assert list(frame["model"]) == ["full", "no_soft_attention", "ha"]
    assert {"mse_wag", "improvement_books", "p_fails", "wins"} <= set(frame.columns)
    payload = report.to_dict()
    assert payload["reference"] == "full"
    assert payload["comparisons"]["ha"]["wins"] == report.comparisons["ha"].wins


def test_relative_improvement_uses_mean_mse(tiny_dataset, builders, fast_train_config):
    report = run_experiment(tiny_dataset, builders, fast_train_config, seeds=[5])
    full = report.models["full"].mean_mse["wag"]
    ha = report.models["ha"].mean_mse["wag"]
    assert report.comparisons["ha"].relative_improvement["wag"] == pytest.approx((ha - full) / ha)


def test_experiment_preconditions(tiny_dataset, tiny_model_config, fast_train_config):
    with pytest.raises(ModelError):
        run_experiment(tiny_dataset, [build_ablation("ha")], fast_train_config, seeds=[0])
    with pytest.raises(ModelError):
        run_experiment(tiny_dataset, [build_ablation("full", tiny_model_config)] * 2, fast_train_config, seeds=[0])
    with pytest.raises(ModelError):
        run_experiment(tiny_dataset, [build_ablation("full", tiny_model_config)], fast_train_config, seeds=[])

    for sample in tiny_dataset.samples:
        if sample.split == "test":
            sample.split = "train"
    with pytest.raises(DataError):
        run_experiment(tiny_dataset, [build_ablation("full", tiny_model_config)], fast_train_config, seeds=[0])


def test_default_builders():
    kinds = [b.kind for b in default_builders()]
    assert kinds == ["full", "single_task", "standard_lstm_gates", "no_soft_attention", "history_only_lstm", "ha"]
    assert "ha" not in [b.kind for b in default_builders(include_ha=False)]


def test_sweep_units(tiny_dataset, tiny_model_config, fast_train_config):
    report = sweep_units(tiny_dataset, [1, 2], tiny_model_config, fast_train_config, seeds=[0])
    assert report.counts == [1, 2]
    assert set(report.mean_mse) == {1, 2}
    assert list(report.to_frame()["num_units"]) == [1, 2]
    assert set(report.to_dict()["units"]) == {"1", "2"}

    with pytest.raises(ModelError):
        sweep_units(tiny_dataset, [0], tiny_model_config, fast_train_config, seeds=[0])


@pytest.mark.slow
def test_full_model_beats_its_variants():
    dataset = generate(SynthConfig(students=1000, days=14, informative_days=4, seed=2017))
    config = ModelConfig(embed_dim=8, lib_hidden=6, dorm_hidden=3, trend_hidden=4,
                         unit_fc_dim=16, num_units=2, dropout_rate=0.2)
    report = run_experiment(
        dataset,
        default_builders(config, include_ha=False),
        TrainConfig(epochs=15, batch_size=32),
        seeds=[0, 1, 2, 3, 4],
    )
    for kind in ("single_task", "standard_lstm_gates", "no_soft_attention", "history_only_lstm"):
        assert report.comparisons[kind].wins >= 4, kind
    assert np.all(np.isfinite(report.to_frame()[["mse_wag", "mse_books", "mse_fails"]].to_numpy()))
