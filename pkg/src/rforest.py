"""
Online random forest with feature-presence split rules.

A tree leaf keeps every example routed to it. When a new example pushes the
leaf's Gini impurity above the threshold, the leaf is replaced by a node
testing one feature (present -> left). The forest grows a new tree with
probability 1/n per insert until it holds n_max trees; prediction ranks the
trees' votes.
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple, Union

from pyrsistent import PMap, PVector, pmap, pvector

from src.config import RForestParams
from src.data_types import Example, FeatureVector
from src.errors import DegenerateSplit, EmptyLabelSet, NoSplittingFeature
from src.rng import Rng

logger = logging.getLogger(__name__)

MAX_DRAW_RETRIES = 16


@dataclass(frozen=True)
class SplitRule:
    feature: int

    def goes_left(self, fv: FeatureVector) -> bool:
        return self.feature in fv.ids


@dataclass(frozen=True)
class TreeLeaf:
    label: int
    examples: PVector = field(default_factory=pvector)
    label_counts: Optional[PMap] = field(default=None, compare=False, repr=False)  # tactic -> count

    def __post_init__(self):
        if self.label_counts is None:
            object.__setattr__(self, "label_counts", pmap(Counter(e.tactic for e in self.examples)))

    def add(self, example: Example, max_leaf_examples: Optional[int] = None) -> "TreeLeaf":
        """Store one more example, dropping the oldest ones beyond the soft cap."""
        stored = self.examples.append(example)
        counts = self.label_counts.set(example.tactic, self.label_counts.get(example.tactic, 0) + 1)
        if max_leaf_examples is not None and len(stored) > max_leaf_examples:
            for old in stored[:-max_leaf_examples]:
                left = counts[old.tactic] - 1
                counts = counts.set(old.tactic, left) if left else counts.remove(old.tactic)
            stored = stored[-max_leaf_examples:]
        return TreeLeaf(self.label, stored, counts)

    def impurity(self) -> float:
        return _gini_of_counts(self.label_counts.values())


@dataclass(frozen=True)
class TreeNode:
    rule: SplitRule
    left: "DecisionTree"
    right: "DecisionTree"


DecisionTree = Union[TreeLeaf, TreeNode]


def _gini_of_counts(counts: Iterable[int]) -> float:
    counts = list(counts)
    total = sum(counts)
    if total == 0:
        raise EmptyLabelSet("gini impurity of an empty label set")
    return 1.0 - sum((c / total) ** 2 for c in counts)


def gini_impurity(labels: Iterable[int]) -> float:
    """1 - sum of squared class frequencies."""
    return _gini_of_counts(Counter(labels).values())


def information_gain(parent: Sequence[int], left: Sequence[int], right: Sequence[int]) -> float:
    if not left or not right:
        raise DegenerateSplit("both sides of a split must be non-empty")
    n = len(parent)
    return (
        gini_impurity(parent)
        - len(left) / n * gini_impurity(left)
        - len(right) / n * gini_impurity(right)
    )


def _partition(examples: Sequence[Example], feature: int) -> Tuple[List[Example], List[Example]]:
    left, right = [], []
    for e in examples:
        (left if feature in e.features.ids else right).append(e)
    return left, right


def _gain_of(examples: Sequence[Example], labels: List[int], feature: int) -> float:
    left, right = _partition(examples, feature)
    return information_gain(labels, [e.tactic for e in left], [e.tactic for e in right])


def generate_split_rule(examples: Sequence[Example], rng: Rng) -> Tuple[SplitRule, Rng]:
    """
    Pick a split feature for a leaf.

    floor(sqrt(n)) candidates are drawn, each from the feature difference of
    two random examples; the candidate with the highest information gain wins
    (smaller feature id on ties).

    Raises:
        NoSplittingFeature: every example has the same feature set
    """
    n = len(examples)
    if n < 2:
        raise NoSplittingFeature("need at least two examples to split")
    gen = rng.generator()
    candidates = set()
    for _ in range(max(1, math.isqrt(n))):
        for _ in range(MAX_DRAW_RETRIES):
            i, j = gen.choice(n, size=2, replace=False)
            diff = sorted(examples[i].features.ids - examples[j].features.ids)
            if diff:
                candidates.add(diff[gen.integers(len(diff))])
                break

    if not candidates:
        id_sets = [e.features.ids for e in examples]
        varying = sorted(frozenset().union(*id_sets) - frozenset.intersection(*id_sets))
        if not varying:
            raise NoSplittingFeature("all examples share the same feature set")
        candidates.add(varying[gen.integers(len(varying))])

    labels = [e.tactic for e in examples]
    best = max(sorted(candidates), key=lambda f: _gain_of(examples, labels, f))
    return SplitRule(best), rng.advance()


def add_example_to_tree(
    tree: DecisionTree,
    example: Example,
    threshold: float,
    rng: Rng,
    max_leaf_examples: Optional[int] = None,
) -> Tuple[DecisionTree, Rng]:
    """
    Route `example` to its leaf and store it there, splitting the leaf when
    its impurity exceeds `threshold`. Returns a new tree; `tree` is untouched.
    """
    trail = []
    node = tree
    while isinstance(node, TreeNode):
        went_left = node.rule.goes_left(example.features)
        trail.append((node, went_left))
        node = node.left if went_left else node.right

    new: DecisionTree = node.add(example, max_leaf_examples)
    stored = new.examples

    if new.impurity() > threshold:
        try:
            rule, rng = generate_split_rule(stored, rng)
        except NoSplittingFeature:
            logger.debug("leaf with %d examples has no distinguishing feature", len(stored))
        else:
            gen = rng.generator()
            rng = rng.advance()
            left, right = _partition(stored, rule.feature)
            new = TreeNode(
                rule,
                TreeLeaf(left[gen.integers(len(left))].tactic, pvector(left)),
                TreeLeaf(right[gen.integers(len(right))].tactic, pvector(right)),
            )

    for parent, went_left in reversed(trail):
        if went_left:
            new = TreeNode(parent.rule, new, parent.right)
        else:
            new = TreeNode(parent.rule, parent.left, new)
    return new, rng


@dataclass(frozen=True)
class RandomForest:
    trees: PVector = field(default_factory=pvector)
    n_max: int = 320
    impurity: float = 0.5
    rng: Rng = field(default_factory=lambda: Rng(42))
    max_leaf_examples: Optional[int] = None

    @classmethod
    def empty(cls, params: RForestParams, seed: int) -> "RandomForest":
        return cls(
            n_max=params.n_max,
            impurity=params.impurity,
            rng=Rng(seed),
            max_leaf_examples=params.max_leaf_examples,
        )


def _single_leaf(example: Example) -> TreeLeaf:
    return TreeLeaf(example.tactic, pvector([example]))


def add_example_to_forest(forest: RandomForest, example: Example) -> RandomForest:
    """
    Insert one example. The first insert plants the first tree; afterwards a
    new tree (a leaf built from `example`) is appended with probability 1/n
    while fewer than n_max trees exist. `example` goes into every tree that
    existed before the call.
    """
    if not forest.trees:
        return replace(forest, trees=pvector([_single_leaf(example)]), rng=forest.rng.advance())

    n = len(forest.trees)
    grow = n < forest.n_max and forest.rng.generator().integers(1, n + 1) == 1

    trees = forest.trees.evolver()
    for j, tree in enumerate(forest.trees):
        trees[j], _ = add_example_to_tree(
            tree, example, forest.impurity, forest.rng.spawn(j), forest.max_leaf_examples
        )
    if grow:
        trees.append(_single_leaf(example))
    return replace(forest, trees=trees.persistent(), rng=forest.rng.advance())


def predict_tree(tree: DecisionTree, fv: FeatureVector) -> int:
    node = tree
    while isinstance(node, TreeNode):
        node = node.left if node.rule.goes_left(fv) else node.right
    return node.label


def predict_forest(forest: RandomForest, fv: FeatureVector, k: int) -> List[int]:
    """Tactics ranked by number of tree votes; ties keep first-vote order."""
    votes = Counter(predict_tree(t, fv) for t in forest.trees)
    return [tactic for tactic, _ in votes.most_common()][:k]


def iter_leaves(tree: DecisionTree) -> Iterator[Tuple[List[Tuple[SplitRule, bool]], TreeLeaf]]:
    """Yield (rule trail, leaf) for every leaf, left to right."""
    stack = [([], tree)]
    while stack:
        trail, node = stack.pop()
        if isinstance(node, TreeLeaf):
            yield trail, node
        else:
            stack.append((trail + [(node.rule, False)], node.right))
            stack.append((trail + [(node.rule, True)], node.left))


def routing_holds(tree: DecisionTree) -> bool:
    """Every stored example satisfies the rules on its root-to-leaf trail."""
    for trail, leaf in iter_leaves(tree):
        for e in leaf.examples:
            if any(rule.goes_left(e.features) != left for rule, left in trail):
                return False
    return True


def tree_size(tree: DecisionTree) -> int:
    return sum(len(leaf.examples) for _, leaf in iter_leaves(tree))
