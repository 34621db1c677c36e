"""Tests for the persistent LSH forest."""

import numpy as np
import pytest
from pyrsistent import pvector

from src.config import LshfParams
from src.data_types import FeatureVector
from src.lshf import (
    EMPTY_LEAF,
    BitHashFamily,
    Leaf,
    LshForest,
    Node,
    insert,
    path_of,
    predict,
    query,
    rebuild,
    trie_depth,
    trie_size,
)
from src.similarity import ExampleDb, knn_exact, weighted_jaccard
from src.synthetic import feature_database, perturb
from tests.conftest import example

fv = FeatureVector.from_ids


class TableFamily:
    """Bit hash family that reads bits from a table (trie index ignored)."""

    def __init__(self, bits, arity=1):
        self.bits = bits
        self.arity = arity
        self.seed = 0

    def bit(self, i, fid):
        return self.bits[fid]

    def check_index(self, i):
        if not 1 <= i <= self.arity:
            raise ValueError(i)


def buckets(trie):
    """Seqs of every leaf and every terminal bucket."""
    if isinstance(trie, Leaf):
        return [[entry.example.seq for entry in trie.entries]]
    own = [[entry.example.seq for entry in trie.terminal]] if trie.terminal else []
    return own + buckets(trie.left) + buckets(trie.right)


def test_path_is_sorted_bits():
    family = TableFamily({0: 0, 1: 1, 2: 1})
    assert path_of(family, 1, fv([0, 1, 2]), 20) == (0, 1, 1)
    assert path_of(family, 1, fv([1, 2, 0]), 20) == (0, 1, 1)


def test_path_of_empty_vector():
    assert path_of(BitHashFamily(5, 3), 2, fv([]), 20) == ()


def test_path_is_truncated_to_max_depth():
    path = path_of(BitHashFamily(5, 1), 1, fv(range(30)), 20)
    assert len(path) == 20
    assert list(path) == sorted(path)


def test_bit_hash_is_deterministic_and_seeded():
    a, b = BitHashFamily(1, 4), BitHashFamily(1, 4)
    assert [a.bit(i, x) for i in range(1, 5) for x in range(50)] == [b.bit(i, x) for i in range(1, 5) for x in range(50)]
    other = BitHashFamily(2, 4)
    assert [a.bit(1, x) for x in range(200)] != [other.bit(1, x) for x in range(200)]


@pytest.mark.parametrize("i", [0, 4])
def test_trie_index_out_of_range(i):
    with pytest.raises(ValueError):
        path_of(BitHashFamily(0, 3), i, fv([1]), 20)


def test_insert_into_empty_forest():
    forest = insert(LshForest.empty(LshfParams(n_tries=3), 0), example([1, 2], 9, 0))
    assert forest.size == 1
    for trie in forest.tries:
        assert isinstance(trie, Leaf)
        assert buckets(trie) == [[0]]


def test_leaf_splits_on_first_differing_bit():
    forest = LshForest((EMPTY_LEAF,), TableFamily({0: 0, 1: 1}), max_depth=20)
    forest = insert(insert(forest, example([0], 1, 0)), example([1], 2, 1))
    root = forest.tries[0]
    assert isinstance(root, Node)
    assert buckets(root.left) == [[0]]
    assert buckets(root.right) == [[1]]


def test_identical_paths_share_a_bucket():
    forest = LshForest.empty(LshfParams(n_tries=5), 3)
    for seq, ids in enumerate([[1, 2, 3], [4, 5], [1, 2, 3], [6]]):
        forest = insert(forest, example(ids, seq, seq))
    for trie in forest.tries:
        assert any({0, 2} <= set(bucket) for bucket in buckets(trie))


def _forest(n=300, seed=0, params=LshfParams()):
    examples, interner = feature_database(n=n, seed=seed)
    return rebuild(params, seed, examples), examples, interner


def test_every_trie_holds_every_example_within_max_depth():
    forest, examples, _ = _forest(params=LshfParams(n_tries=4, max_depth=6))
    assert forest.size == len(examples)
    for trie in forest.tries:
        assert trie_size(trie) == len(examples)
        assert trie_depth(trie) <= 6


def test_insert_leaves_previous_forest_untouched():
    forest, examples, interner = _forest(n=100)
    queries = [e.features for e in examples[:20]]
    before = [predict(forest, q, 10, interner=interner) for q in queries]
    bigger = insert(forest, example([0, 1, 2, 3], 999, 1000))
    assert bigger.size == forest.size + 1
    assert [predict(forest, q, 10, interner=interner) for q in queries] == before


def test_query_returns_everything_when_k_exceeds_size():
    forest, examples, interner = _forest(n=60)
    result = query(forest, examples[5].features, 100, interner=interner)
    assert sorted(e.seq for e in result) == list(range(60))


def test_query_never_repeats_an_example():
    forest, examples, interner = _forest()
    gen = np.random.default_rng(4)
    for e in examples[:30]:
        result = query(forest, perturb(e.features, gen, 500), 10, interner=interner)
        seqs = [x.seq for x in result]
        assert len(seqs) == len(set(seqs))
        assert len(seqs) >= 10


def test_exact_duplicate_ranks_first():
    forest, examples, interner = _forest()
    for e in examples[::37]:
        best = query(forest, e.features, 10, interner=interner)[0]
        assert weighted_jaccard(interner, e.features, best.features) == pytest.approx(1.0)


def test_resorted_candidates_follow_exact_knn_order():
    forest, examples, interner = _forest()
    gen = np.random.default_rng(8)
    for e in examples[:25]:
        q = perturb(e.features, gen, 500)
        candidates = query(forest, q, 10, interner=interner)
        oracle = knn_exact(ExampleDb(pvector(candidates), interner), q, len(candidates))
        assert candidates == [x for x, _ in oracle]


def test_resort_only_changes_order():
    forest, examples, interner = _forest()
    q = examples[3].features
    raw = query(forest, q, 10, resort=False)
    resorted = query(forest, q, 10, interner=interner)
    assert sorted(e.seq for e in raw) == sorted(e.seq for e in resorted)


def test_tfidf_resort_needs_the_interner():
    forest, examples, _ = _forest(n=20)
    with pytest.raises(ValueError):
        query(forest, examples[0].features, 5, resort=True, interner=None, kind="tfidf")


def test_predict_on_empty_forest():
    assert predict(LshForest.empty(LshfParams(), 0), fv([1, 2]), 10, kind="plain") == []


def test_predict_deduplicates_tactics():
    forest = LshForest.empty(LshfParams(), 0)
    for seq, tactic in enumerate([1, 2, 1]):
        forest = insert(forest, example([0, 1], tactic, seq))
    assert predict(forest, fv([0, 1]), 2, kind="plain") == [1, 2]


def test_predict_with_single_tactic_neighbourhood():
    forest = LshForest.empty(LshfParams(), 0)
    for seq in range(5):
        forest = insert(forest, example([0, seq + 1], 7, seq))
    assert predict(forest, fv([0]), 10, kind="plain") == [7]
