"""Tests for binary model snapshots."""

import pytest

from src import snapshot
from src.config import ALL_FEATURES, KNN_EXACT, LSHF_DEFAULT, RFOREST_TOP10, RForestParams, RunConfig
from src.errors import SnapshotError
from src.evaluation import train
from src.models import build_model
from src.synthetic import clustered_corpus

CONFIGS = [
    RunConfig(model="knn-exact", features=ALL_FEATURES, seed=7),
    RunConfig(model="lshf", features=ALL_FEATURES, seed=7),
    RunConfig(model="rforest", features=ALL_FEATURES, seed=7),
    RunConfig(model="rforest", rforest=RForestParams(impurity=0.1, max_leaf_examples=8), seed=3),
]


@pytest.fixture(scope="module")
def records():
    return clustered_corpus(n=150, seed=2)


def _trained(config, records):
    return train(build_model(config), config.features, records[:120])


@pytest.mark.parametrize("config", CONFIGS, ids=lambda c: c.model)
def test_loaded_learner_predicts_like_the_saved_one(config, records):
    learner = _trained(config, records)
    loaded, seed = snapshot.loads(snapshot.dumps(learner, config.seed))
    assert seed == config.seed
    assert loaded.features == learner.features
    assert loaded.model.size == learner.model.size
    for record in records[100:]:
        assert loaded.predict(record.state) == learner.predict(record.state)


@pytest.mark.parametrize("config", CONFIGS, ids=lambda c: c.model)
def test_snapshots_are_byte_stable(config, records):
    learner = _trained(config, records)
    data = snapshot.dumps(learner, config.seed)
    assert snapshot.dumps(learner, config.seed) == data
    loaded, seed = snapshot.loads(data)
    assert snapshot.dumps(loaded, seed) == data


def test_tactic_names_survive(records):
    learner = _trained(LSHF_DEFAULT, records)
    loaded, _ = snapshot.loads(snapshot.dumps(learner, LSHF_DEFAULT.seed))
    assert dict(loaded.tactic_names) == dict(learner.tactic_names)


def test_save_and_load_files(tmp_path, records):
    learner = _trained(KNN_EXACT, records)
    path = tmp_path / "model.snap"
    size = snapshot.save(learner, KNN_EXACT.seed, path)
    assert path.stat().st_size == size
    loaded, _ = snapshot.load(path)
    assert loaded.predict(records[130].state) == learner.predict(records[130].state)


def test_missing_snapshot_file(tmp_path):
    with pytest.raises(SnapshotError):
        snapshot.load(tmp_path / "nothing.snap")


@pytest.mark.parametrize(
    "corrupt",
    [
        lambda data: b"XXXX" + data[4:],
        lambda data: data[:-3],
        lambda data: data[:10],
        lambda data: data + b"\x00",
        lambda data: data[:4] + b"\x09\x00" + data[6:],
    ],
    ids=["magic", "truncated-tail", "truncated-header", "trailing", "version"],
)
def test_corrupt_snapshots_are_rejected(corrupt, records):
    learner = _trained(RFOREST_TOP10, records)
    with pytest.raises(SnapshotError):
        snapshot.loads(corrupt(snapshot.dumps(learner, RFOREST_TOP10.seed)))
