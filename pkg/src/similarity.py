"""
Similarity measures and the brute-force k-NN predictor.

Both measures work on the sets of distinct feature ids; occurrence counts
are ignored here.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Literal, Tuple

from pyrsistent import PVector, pvector

from src.data_types import Example, FeatureVector
from src.errors import UnknownFeatureId, UnseenFeature
from src.features import FeatureInterner

SimilarityKind = Literal["plain", "tfidf"]

Scorer = Callable[[FeatureVector], float]


def jaccard(f1: FeatureVector, f2: FeatureVector) -> float:
    """|f1 ∩ f2| / |f1 ∪ f2| on distinct ids; two empty vectors are identical (1.0)."""
    a, b = f1.ids, f2.ids
    union = len(a | b)
    if union == 0:
        return 1.0
    return len(a & b) / union


def tfidf(interner: FeatureInterner, fid: int) -> float:
    """ln(N / |x|_N) where N counts recorded examples and |x|_N those containing x."""
    interner.check(fid)
    df = interner.doc_count[fid]
    if df == 0:
        raise UnseenFeature(fid)
    return math.log(interner.total_examples / df)


def _known_ids(interner: FeatureInterner, fv: FeatureVector) -> frozenset:
    n = len(interner.doc_count)
    return frozenset(x for x in fv.ids if x < n and interner.doc_count[x] > 0)


def weighted_jaccard(interner: FeatureInterner, f1: FeatureVector, f2: FeatureVector) -> float:
    """
    TfIdf-weighted Jaccard index.

    Features that occur in no recorded example are dropped first. Returns 0
    when the union carries no weight.
    """
    a = _known_ids(interner, f1)
    b = _known_ids(interner, f2)
    union = sum(tfidf(interner, x) for x in a | b)
    if union == 0:
        return 0.0
    return sum(tfidf(interner, x) for x in a & b) / union


def make_scorer(query: FeatureVector, kind: SimilarityKind, interner: FeatureInterner) -> Scorer:
    """Similarity to `query` as a one-argument function; query weights are computed once."""
    if kind == "plain":
        return lambda fv: jaccard(query, fv)

    weights = {x: tfidf(interner, x) for x in _known_ids(interner, query)}
    query_weight = sum(weights.values())
    n = len(interner.doc_count)

    def score(fv: FeatureVector) -> float:
        inter = 0.0
        extra = 0.0
        for x in fv.ids:
            w = weights.get(x)
            if w is not None:
                inter += w
            elif x < n and interner.doc_count[x] > 0:
                extra += tfidf(interner, x)
        union = query_weight + extra
        return inter / union if union > 0 else 0.0

    return score


def rank_by_score(examples: Iterable[Example], scorer: Scorer) -> List[Tuple[Example, float]]:
    """Score and sort: highest similarity first, ties by higher seq."""
    scored = [(e, scorer(e.features)) for e in examples]
    scored.sort(key=lambda pair: (-pair[1], -pair[0].seq))
    return scored


@dataclass(frozen=True)
class ExampleDb:
    """Examples in insertion order plus the interner holding their statistics."""

    examples: PVector = field(default_factory=pvector)
    interner: FeatureInterner = field(default_factory=FeatureInterner)

    def add(self, example: Example, interner: FeatureInterner) -> "ExampleDb":
        """`interner` must already count `example` (see features.record_example)."""
        return ExampleDb(self.examples.append(example), interner)

    def __len__(self) -> int:
        return len(self.examples)


def knn_exact(
    db: ExampleDb, query: FeatureVector, k: int, kind: SimilarityKind = "tfidf"
) -> List[Tuple[Example, float]]:
    """Score every stored example against `query` and keep the best k."""
    if k < 1:
        raise ValueError("k must be positive")
    scorer = make_scorer(query, kind, db.interner)
    return rank_by_score(db.examples, scorer)[:k]


def rank_tactics(neighbors: Iterable[Example]) -> List[int]:
    """Distinct tactic hashes in order of first appearance."""
    seen = set()
    ranked = []
    for e in neighbors:
        if e.tactic not in seen:
            seen.add(e.tactic)
            ranked.append(e.tactic)
    return ranked
