import numpy as np
import pytest

from graph.workflow import resolve_model_config
from models import ModelConfig, SynthConfig, TrainConfig
from synth.generator import generate


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def tiny_synth_config():
    return SynthConfig(
        students=24,
        days=5,
        informative_days=2,
        min_history=0,
        max_history=3,
        profile_vocab_sizes={"gender": 2, "school": 2, "department": 3},
        course_catalog=8,
        courses_per_student=3,
        validation_fraction=0.2,
        test_fraction=0.2,
        seed=7,
    )


@pytest.fixture
def tiny_dataset(tiny_synth_config):
    return generate(tiny_synth_config)


@pytest.fixture
def tiny_model_config(tiny_dataset):
    config = ModelConfig(
        embed_dim=4,
        lib_hidden=3,
        dorm_hidden=2,
        trend_hidden=3,
        unit_fc_dim=5,
        num_units=2,
        days=5,
        dropout_rate=0.0,
    )
    return resolve_model_config(config, tiny_dataset)


@pytest.fixture
def fast_train_config():
    return TrainConfig(epochs=2, batch_size=8, seed=3)
