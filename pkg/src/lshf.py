"""
Persistent LSH forest for approximate k-NN under Jaccard similarity.

Each of the n tries hashes every feature of an example down to one bit with
its own hash function; the example's path in that trie is the sorted
multiset of those bits, truncated to max_depth. Examples sharing a long
prefix with the query are the most similar ones, so a query descends all
tries at once and, on the way back up, collects progressively larger
buckets until it has at least k distinct examples.

All structures are immutable. `insert` copies the nodes along the touched
paths and leaves the previous forest intact.
"""

import logging
import struct
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple, Union

import xxhash
from pyrsistent import PVector, pvector

from src.config import LshfParams
from src.data_types import Example, FeatureVector
from src.features import FeatureInterner
from src.similarity import SimilarityKind, make_scorer, rank_by_score, rank_tactics

logger = logging.getLogger(__name__)

Path = Tuple[int, ...]

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class BitHashFamily:
    """h_i(x) in {0, 1} for trie index i in [1..arity] and feature id x."""

    seed: int
    arity: int

    def bit(self, i: int, fid: int) -> int:
        digest = xxhash.xxh64_intdigest(struct.pack("<QQ", i, fid), seed=self.seed & _MASK64)
        return digest & 1

    def check_index(self, i: int) -> None:
        if not 1 <= i <= self.arity:
            raise ValueError(f"trie index {i} outside [1..{self.arity}]")


def path_of(family: BitHashFamily, i: int, fv: FeatureVector, max_depth: int) -> Path:
    """Sorted bits {h_i(x) : x in fv} (zeros first), at most max_depth of them."""
    family.check_index(i)
    ones = sum(family.bit(i, x) for x in fv.ids)
    zeros = len(fv.ids) - ones
    zeros = min(zeros, max_depth)
    ones = min(ones, max_depth - zeros)
    return (0,) * zeros + (1,) * ones


@dataclass(frozen=True)
class Entry:
    example: Example
    path: Path


@dataclass(frozen=True)
class Leaf:
    entries: PVector = field(default_factory=pvector)


@dataclass(frozen=True)
class Node:
    """Inner trie node. `terminal` holds entries whose path ends exactly here."""

    left: "Trie"
    right: "Trie"
    terminal: PVector = field(default_factory=pvector)


Trie = Union[Leaf, Node]

EMPTY_LEAF = Leaf()


def _insert(trie: Trie, entry: Entry, depth: int) -> Trie:
    if isinstance(trie, Leaf):
        if not trie.entries or depth >= len(entry.path):
            return Leaf(trie.entries.append(entry))
        node: Trie = Node(EMPTY_LEAF, EMPTY_LEAF)
        for old in trie.entries:
            node = _insert(node, old, depth)
        return _insert(node, entry, depth)

    if depth >= len(entry.path):
        return Node(trie.left, trie.right, trie.terminal.append(entry))
    if entry.path[depth]:
        return Node(trie.left, _insert(trie.right, entry, depth + 1), trie.terminal)
    return Node(_insert(trie.left, entry, depth + 1), trie.right, trie.terminal)


def _collect(trie: Trie) -> Iterator[Entry]:
    stack = [trie]
    while stack:
        t = stack.pop()
        if isinstance(t, Leaf):
            yield from t.entries
        else:
            yield from t.terminal
            stack.append(t.right)
            stack.append(t.left)


def trie_size(trie: Trie) -> int:
    return sum(1 for _ in _collect(trie))


def trie_depth(trie: Trie) -> int:
    """Number of inner nodes on the longest root-to-leaf path."""
    if isinstance(trie, Leaf):
        return 0
    return 1 + max(trie_depth(trie.left), trie_depth(trie.right))


@dataclass(frozen=True)
class LshForest:
    tries: Tuple[Trie, ...]
    family: BitHashFamily
    max_depth: int
    size: int = 0
    examples: PVector = field(default_factory=pvector)  # insertion order, for snapshots

    @classmethod
    def empty(cls, params: LshfParams, seed: int) -> "LshForest":
        return cls(
            tries=(EMPTY_LEAF,) * params.n_tries,
            family=BitHashFamily(seed, params.n_tries),
            max_depth=params.max_depth,
        )

    @property
    def n_tries(self) -> int:
        return len(self.tries)

    def paths(self, fv: FeatureVector) -> List[Path]:
        return [path_of(self.family, i, fv, self.max_depth) for i in range(1, self.n_tries + 1)]


def insert(forest: LshForest, example: Example) -> LshForest:
    """New forest with `example` stored in every trie."""
    tries = tuple(
        _insert(trie, Entry(example, path), 0)
        for trie, path in zip(forest.tries, forest.paths(example.features))
    )
    return LshForest(
        tries=tries,
        family=forest.family,
        max_depth=forest.max_depth,
        size=forest.size + 1,
        examples=forest.examples.append(example),
    )


def _descend(forest: LshForest, paths: List[Path]) -> List[List[Trie]]:
    """
    Walk all tries along their own paths at once.

    Returns the irrelevant subtries of every level, shallowest level first.
    A trie drops out of the descent when it reaches a leaf or its path runs
    out; at that point the whole subtrie is irrelevant.
    """
    levels: List[List[Trie]] = []
    current = list(zip(forest.tries, paths))
    depth = 0
    while current:
        relevant = []
        irrelevant: List[Trie] = []
        for trie, path in current:
            if isinstance(trie, Leaf) or depth >= len(path):
                irrelevant.append(trie)
                continue
            near, far = (trie.right, trie.left) if path[depth] else (trie.left, trie.right)
            relevant.append((near, path))
            if trie.terminal:
                irrelevant.append(Leaf(trie.terminal))
            irrelevant.append(far)
        levels.append(irrelevant)
        current = relevant
        depth += 1
    return levels


def query(
    forest: LshForest,
    fv: FeatureVector,
    k: int,
    resort: bool = True,
    interner: Optional[FeatureInterner] = None,
    kind: SimilarityKind = "tfidf",
) -> List[Example]:
    """
    Approximate neighbours of `fv`, nearest buckets first, without duplicates.

    Buckets are gathered from the deepest level upwards until at least k
    distinct examples are known; everything gathered is returned (callers
    truncate). With `resort` the candidates are ordered by true similarity
    exactly as knn_exact orders them.
    """
    if k < 1:
        raise ValueError("k must be positive")
    neighbors: List[Example] = []
    seen = set()
    for irrelevant in reversed(_descend(forest, forest.paths(fv))):
        if len(neighbors) >= k:
            break
        for sub in irrelevant:
            for entry in _collect(sub):
                if entry.example.seq not in seen:
                    seen.add(entry.example.seq)
                    neighbors.append(entry.example)

    if resort and neighbors:
        if kind == "tfidf" and interner is None:
            raise ValueError("tfidf re-sorting needs the feature interner")
        scorer = make_scorer(fv, kind, interner)
        neighbors = [e for e, _ in rank_by_score(neighbors, scorer)]
    return neighbors


def predict(
    forest: LshForest,
    fv: FeatureVector,
    k: int,
    resort: bool = True,
    interner: Optional[FeatureInterner] = None,
    kind: SimilarityKind = "tfidf",
) -> List[int]:
    """Ranked tactic hashes of the approximate neighbours, at most k."""
    return rank_tactics(query(forest, fv, k, resort, interner, kind))[:k]


def rebuild(params: LshfParams, seed: int, examples) -> LshForest:
    """Forest holding `examples` inserted in the given order."""
    forest = LshForest.empty(params, seed)
    for e in examples:
        forest = insert(forest, e)
    logger.debug("rebuilt LSH forest: %d tries, %d examples", forest.n_tries, forest.size)
    return forest
