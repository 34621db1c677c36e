"""End-to-end behaviour checks on synthetic corpora and feature databases."""

import numpy as np
import pytest
from pyrsistent import pvector

from src.config import FeatureConfig, LshfParams, RForestParams, RunConfig
from src.data_types import FeatureVector
from src.evaluation import OnlineLearner, SplitSpec, chrono_eval, split_eval, topk_accuracy, train
from src.features import tactic_hash
from src.lshf import query, rebuild
from src.models import KnnExactModel, LshfModel, RForestModel, build_model
from src.rforest import RandomForest, add_example_to_forest, routing_holds, tree_size
from src.similarity import ExampleDb, jaccard, knn_exact, weighted_jaccard
from src.synthetic import clustered_corpus, feature_database, locality_corpus, perturb, separable_corpus
from src.utils import Stopwatch, peak_memory_bytes, run_bench
from tests.conftest import interner_with


def test_similarity_properties_on_random_pairs():
    gen = np.random.default_rng(2024)
    universe = 40
    interner = interner_with(gen.integers(1, 50, size=universe).tolist(), total=50)

    def draw():
        return FeatureVector.from_ids(gen.choice(universe, size=gen.integers(0, 12), replace=False).tolist())

    for _ in range(10_000):
        a, b = draw(), draw()
        plain = jaccard(a, b)
        weighted = weighted_jaccard(interner, a, b)
        assert plain == jaccard(b, a)
        assert weighted == pytest.approx(weighted_jaccard(interner, b, a))
        assert 0.0 <= plain <= 1.0
        assert 0.0 <= weighted <= 1.0 + 1e-12
        assert jaccard(a, a) == 1.0
        if any(interner.doc_count[x] < interner.total_examples for x in a.ids):
            assert weighted_jaccard(interner, a, a) == pytest.approx(1.0)


def _recall(found, truth):
    return len({e.seq for e in found} & {e.seq for e in truth}) / len(truth)


@pytest.mark.slow
def test_lsh_forest_against_exact_knn():
    recall = {1: [], 11: []}
    for seed in range(20):
        examples, interner = feature_database(n=1000, seed=seed)
        db = ExampleDb(pvector(examples), interner)
        forests = {n: rebuild(LshfParams(n_tries=n), seed, examples) for n in recall}
        gen = np.random.default_rng(seed)
        for i in gen.choice(len(examples), size=20, replace=False):
            q = perturb(examples[int(i)].features, gen, 500)
            truth = [e for e, _ in knn_exact(db, q, 10)]
            for n, forest in forests.items():
                candidates = query(forest, q, 10, interner=interner)
                oracle = knn_exact(ExampleDb(pvector(candidates), interner), q, len(candidates))
                assert candidates == [e for e, _ in oracle]
                recall[n].append(_recall(candidates[:10], truth))
        everything = query(forests[11], examples[0].features, len(examples) + 1, interner=interner)
        assert sorted(e.seq for e in everything) == list(range(len(examples)))
    assert np.mean(recall[11]) >= np.mean(recall[1])


@pytest.mark.slow
@pytest.mark.parametrize("kind", ["lshf", "rforest"])
def test_old_versions_answer_like_before(kind):
    records = clustered_corpus(n=1000, n_clusters=30, seed=5)
    probes = [r.state for r in records[::97]]
    learner = OnlineLearner(build_model(RunConfig(model=kind, seed=5)), FeatureConfig())
    versions = []
    gen = np.random.default_rng(6)
    for record in records:
        learner = learner.learn(record)
        versions.append((learner, [learner.predict(p) for p in probes]))
        old, answers = versions[int(gen.integers(len(versions)))]
        assert [old.predict(p) for p in probes] == answers


def test_random_forest_learns_a_separable_rule():
    records = separable_corpus(n=1200, seed=3)
    learner = train(RForestModel.empty(RForestParams(impurity=0.1), 3), FeatureConfig(), records[:1000])
    preds = [learner.predict(r.state, 1) for r in records[1000:]]
    truths = [tactic_hash(r.tactic) for r in records[1000:]]
    assert topk_accuracy(preds, truths, 1) >= 0.95


@pytest.mark.slow
def test_random_forest_growth_over_ten_thousand_inserts():
    records = clustered_corpus(n=10_000, n_clusters=50, seed=9)
    learner = train(RForestModel.empty(RForestParams(), 9), FeatureConfig(), records)
    forest: RandomForest = learner.model.forest
    assert 2 <= len(forest.trees) <= 320
    assert tree_size(forest.trees[0]) == 10_000
    assert all(routing_holds(t) for t in forest.trees)


def test_random_forest_respects_a_small_cap():
    forest = RandomForest.empty(RForestParams(n_max=1), 0)
    examples, _ = feature_database(n=200, seed=1)
    for e in examples:
        forest = add_example_to_forest(forest, e)
    assert len(forest.trees) == 1


@pytest.mark.parametrize("make_model", [
    lambda: LshfModel.empty(LshfParams(), 0),
    lambda: RForestModel.empty(RForestParams(), 0),
    lambda: KnnExactModel(),
], ids=["lshf", "rforest", "knn-exact"])
def test_chronological_beats_split_on_local_corpora(make_model):
    records = locality_corpus(seed=1)
    chrono = chrono_eval(records, [make_model()], FeatureConfig())
    split = split_eval(records, SplitSpec(test_modules=frozenset({"Locality.M5"})), [make_model()], FeatureConfig())
    (c,), (s,) = chrono.models.values(), split.models.values()
    assert c.top10 >= s.top10


@pytest.mark.slow
@pytest.mark.parametrize("kind", ["knn-exact", "lshf"])
def test_insert_cost_stays_flat(kind):
    records = clustered_corpus(n=10_000, n_clusters=50, seed=0)
    result = run_bench(build_model(RunConfig(model=kind, seed=0)), FeatureConfig(), records, n_queries=100)
    assert result.amortized_ratio(1000) <= 3.0
    assert result.peak_memory < 4 * 2**30


@pytest.mark.slow
def test_lsh_forest_query_latency():
    records = clustered_corpus(n=10_000, n_clusters=50, seed=0)
    result = run_bench(build_model(RunConfig(model="lshf", seed=0)), FeatureConfig(), records, n_queries=200)
    assert np.median(result.query_seconds) <= 0.05


@pytest.mark.slow
def test_random_forest_insert_cost_per_tree_stays_flat():
    # the tree count itself grows with the 1/n planting rule
    records = clustered_corpus(n=10_000, n_clusters=50, seed=0)
    learner = OnlineLearner(build_model(RunConfig(model="rforest", seed=0)), FeatureConfig())
    per_tree = []
    for record in records:
        times = []
        with Stopwatch(times):
            learner = learner.learn(record)
        per_tree.append(times[0] / len(learner.model.forest.trees))
    assert np.mean(per_tree[-1000:]) / np.mean(per_tree[:1000]) <= 3.0
    assert peak_memory_bytes() < 4 * 2**30
