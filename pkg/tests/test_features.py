"""Tests for feature extraction and the feature interner."""

from collections import Counter

import pytest

from src.config import FeatureConfig
from src.data_types import FeatureVector
from src.errors import UnknownFeatureId
from src.features import (
    Feature,
    FeatureInterner,
    Origin,
    extract_original,
    extract_structure,
    extract_vertical,
    extract_walks,
    featurize_state,
    record_example,
    tactic_hash,
    tactic_hex,
    term_features,
)
from src.terms import parse_term
from tests.conftest import state


def test_original_features():
    assert Counter(extract_original(parse_term("(f (g x))"))) == Counter(["f", "g", "x", "f-g", "g-x"])


def test_original_features_of_an_atom():
    assert extract_original(parse_term("x")) == ["x"]


def test_original_features_keep_repeated_occurrences():
    assert Counter(extract_original(parse_term("(f x x)"))) == Counter({"f": 1, "x": 2, "f-x": 2})


def test_curried_heads_are_flattened():
    assert Counter(extract_original(parse_term("((f a) b)"))) == Counter(extract_original(parse_term("(f a b)")))


def test_walks():
    walks = extract_walks(parse_term("(f (g x))"))
    assert Counter(walks) == Counter([
        "f:AppFun",
        "g:AppFun",
        "x:AppArg",
        "f:AppFun(g:AppFun)",
        "g:AppFun(x:AppArg)",
        "f:AppFun(g:AppFun(x:AppArg))",
    ])


def test_walks_of_small_terms():
    assert extract_walks(parse_term("a")) == ["a:AppArg"]
    assert set(extract_walks(parse_term("(f x)"))) == {"f:AppFun", "x:AppArg", "f:AppFun(x:AppArg)"}


def test_walks_stop_at_three_nodes():
    walks = extract_walks(parse_term("(f (g (h x)))"))
    assert all(w.count("(") <= 2 for w in walks)
    assert "g:AppFun(h:AppFun(x:AppArg))" in walks


def test_vertical_features():
    assert extract_vertical(parse_term("(f1 (f2 (f3 a)))")) == ["AppFun(AppFun(AppFun(a:AppArg)))"]
    assert extract_vertical(parse_term("a")) == ["a:AppArg"]
    assert extract_vertical(parse_term("(f a b)")) == ["AppFun(a:AppArg)", "AppFun(b:AppArg)"]


def test_structure_feature():
    assert extract_structure(parse_term("(f (g b c) a)")) == "X2(X2(X),X)"
    assert extract_structure(parse_term("a")) == "X"
    assert extract_structure(parse_term("(f a)")) == "X1(X)"


def test_structure_ignores_identifier_names():
    assert extract_structure(parse_term("(plus (mult x y) z)")) == extract_structure(parse_term("(f (g b c) a)"))


def test_term_features_concatenate_enabled_classes():
    term = parse_term("(f (g x))")
    cfg = FeatureConfig(walks=True, structure=True)
    assert term_features(term, cfg) == extract_original(term) + extract_walks(term) + [extract_structure(term)]


def test_union_of_original_and_walks():
    fv, interner = featurize_state(state("(f (g x))"), FeatureConfig(walks=True), FeatureInterner())
    assert len(fv) == 11
    assert interner.next_id == 11


def test_separation_keeps_hypothesis_and_goal_features_apart():
    s = state("a", ("h", "a"))
    fv, interner = featurize_state(s, FeatureConfig(separation=True), FeatureInterner())
    assert fv.as_dict() == {0: 1, 1: 1}
    assert {interner.feature(i).origin for i in fv.ids} == {Origin.HYPOTHESIS, Origin.GOAL}


def test_without_separation_counts_merge():
    s = state("a", ("h", "a"))
    fv, _ = featurize_state(s, FeatureConfig(counts=True), FeatureInterner())
    assert fv.as_dict() == {0: 2}


def test_without_counts_every_count_is_one():
    s = state("(f x x)", ("h", "x"))
    fv, _ = featurize_state(s, FeatureConfig(), FeatureInterner())
    assert set(dict(fv.counts).values()) == {1}


def test_no_feature_lives_in_both_spaces():
    s = state("(eq (f a) b)", ("h1", "(eq a b)"), ("h2", "(f b)"))
    _, interner = featurize_state(s, FeatureConfig(walks=True, separation=True), FeatureInterner())
    texts = Counter(f.text for f in interner.features)
    for f in interner.features:
        assert f.origin is not None
        if texts[f.text] == 2:
            assert Feature(f.text, Origin.HYPOTHESIS) in interner.table
            assert Feature(f.text, Origin.GOAL) in interner.table


def test_featurization_is_deterministic():
    s = state("(eq (plus n O) n)", ("IH", "(eq (plus m O) m)"))
    cfg = FeatureConfig(walks=True, vertical=True, structure=True, counts=True)
    assert featurize_state(s, cfg, FeatureInterner()) == featurize_state(s, cfg, FeatureInterner())


def test_interner_ids_are_stable_as_it_grows():
    cfg = FeatureConfig(walks=True)
    fv1, interner = featurize_state(state("(f (g x))"), cfg, FeatureInterner())
    _, bigger = featurize_state(state("(h y (f z))"), cfg, interner)
    again, _ = featurize_state(state("(f (g x))"), cfg, bigger)
    assert again == fv1
    assert bigger.next_id > interner.next_id
    for i, feature in enumerate(interner.features):
        assert bigger.lookup(feature) == i


def test_featurize_does_not_touch_document_counts():
    _, interner = featurize_state(state("(f x)"), FeatureConfig(), FeatureInterner())
    assert list(interner.doc_count) == [0, 0, 0]
    assert interner.total_examples == 0


def test_record_example_counts_distinct_features_once():
    fv, interner = featurize_state(state("(f x x)"), FeatureConfig(counts=True), FeatureInterner())
    recorded = record_example(interner, fv)
    assert recorded.total_examples == 1
    assert list(recorded.doc_count) == [1, 1, 1]
    assert list(interner.doc_count) == [0, 0, 0]


def test_record_example_rejects_foreign_ids():
    with pytest.raises(UnknownFeatureId):
        record_example(FeatureInterner(), FeatureVector.from_ids([99]))


def test_tactic_hash_is_fnv1a():
    assert tactic_hash("") == 0xCBF29CE484222325
    assert tactic_hash("a") == 0xAF63DC4C8601EC8C
    assert tactic_hex(tactic_hash("a")) == "af63dc4c8601ec8c"


def test_feature_config_letters():
    cfg = FeatureConfig.from_letters("O,W,S")
    assert (cfg.original, cfg.walks, cfg.separation, cfg.counts) == (True, True, True, False)
    assert cfg.letters() == "O,W,S"
    assert FeatureConfig.from_flags(cfg.to_flags()) == cfg


@pytest.mark.parametrize("letters", ["O,X", "S,C", ""])
def test_feature_config_rejects_bad_letters(letters):
    with pytest.raises(ValueError):
        FeatureConfig.from_letters(letters)
