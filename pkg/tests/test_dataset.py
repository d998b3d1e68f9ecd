import json

import numpy as np
import pytest

from data.dataset import Dataset, encode_profile, split_students
from errors import DatasetFormatError, ScalerError


def test_split_is_deterministic_and_disjoint():
    ids = [f"s{i:02d}" for i in range(50)]
    first = split_students(ids, 0.1, 0.2, seed=11)
    second = split_students(list(reversed(ids)), 0.1, 0.2, seed=11)

    assert first == second
    assert set(first) == set(ids)
    counts = {name: sum(1 for v in first.values() if v == name) for name in ("train", "validation", "test")}
    assert counts == {"train": 35, "validation": 5, "test": 10}
    assert split_students(ids, 0.1, 0.2, seed=12) != first


def test_encode_profile_unknown_values_are_zero():
    vocabulary = {"gender": ["f", "m"], "department": ["history", "physics", "math"]}
    assert encode_profile({"gender": "m", "department": "math"}, vocabulary).tolist() == [0, 1, 0, 0, 1]
    assert encode_profile({"gender": "x"}, vocabulary).tolist() == [0, 0, 0, 0, 0]


def test_scalers_are_fit_on_training_students(tiny_dataset):
    train = tiny_dataset.split("train")
    wag = np.array([s.raw_labels[0] for s in train])
    scaler = tiny_dataset.label_scaler(0)
    assert scaler.minimum[0] == wag.min()
    assert scaler.maximum[0] == wag.max()
    for sample in train:
        assert np.all(np.abs(sample.labels) <= 1.0 + 1e-12)
        assert np.allclose(scaler.invert(sample.labels[0]), sample.raw_labels[0])


def test_scaled_features_lie_in_unit_interval(tiny_dataset):
    for sample in tiny_dataset.samples:
        assert sample.behaviors[0].shape == (5, 16)
        assert sample.behaviors[1].shape == (5, 6)
        for array in sample.behaviors + sample.histories:
            assert np.all((array >= 0.0) & (array <= 1.0))
        assert sample.profile.size == tiny_dataset.profile_dim


def test_save_and_load(tiny_dataset, tmp_path):
    path = tiny_dataset.save(tmp_path / "dataset.json")
    restored = Dataset.load(path)

    assert [s.student_id for s in restored.samples] == [s.student_id for s in tiny_dataset.samples]
    assert restored.vocabulary == tiny_dataset.vocabulary
    assert restored.metadata == json.loads(json.dumps(tiny_dataset.metadata))
    for original, loaded in zip(tiny_dataset.samples, restored.samples):
        assert loaded.split == original.split
        assert np.array_equal(loaded.behaviors[0], original.behaviors[0])
        assert np.array_equal(loaded.labels, original.labels)
        assert all(np.array_equal(a, b) for a, b in zip(loaded.histories, original.histories))
    assert restored.save(tmp_path / "again.json").read_bytes() == path.read_bytes()


def test_load_rejects_bad_files(tiny_dataset, tmp_path):
    with pytest.raises(DatasetFormatError):
        Dataset.load(tmp_path / "missing.json")

    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(DatasetFormatError):
        Dataset.load(broken)

    payload = tiny_dataset.to_dict()
    payload["format_version"] = 99
    with pytest.raises(DatasetFormatError):
        Dataset.from_dict(payload)

    payload = tiny_dataset.to_dict()
    del payload["samples"][0]["behaviors"]
    with pytest.raises(DatasetFormatError):
        Dataset.from_dict(payload)


def test_lookup_and_label_scaler(tiny_dataset):
    first = tiny_dataset.samples[0]
    assert tiny_dataset.by_ids([first.student_id]) == [first]
    with pytest.raises(DatasetFormatError):
        tiny_dataset.by_ids(["nobody"])

    empty = Dataset(samples=[], scalers={}, vocabulary={})
    with pytest.raises(ScalerError):
        empty.label_scaler(0)
    assert empty.days == 0
