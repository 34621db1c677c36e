"""
Core data structures for proof states, feature vectors and training examples.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterator, List, Mapping, Tuple, Union


_FORBIDDEN_ATOM_CHARS = frozenset("()")


@dataclass(frozen=True)
class Atom:
    """An identifier leaf of a term."""

    name: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("atom names must be non-empty")
        if any(c.isspace() or c in _FORBIDDEN_ATOM_CHARS for c in self.name):
            raise ValueError(f"invalid atom name {self.name!r}")


@dataclass(frozen=True)
class App:
    """Application of a head term to one or more arguments."""

    head: "Term"
    args: Tuple["Term", ...]

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))
        if not self.args:
            raise ValueError("an application needs at least one argument")


Term = Union[Atom, App]


@dataclass(frozen=True)
class ProofState:
    """Hypotheses and goal at one step of a proof."""

    hypotheses: Tuple[Tuple[str, Term], ...]  # (name, type) pairs, in order
    goal: Term

    def __post_init__(self):
        if not isinstance(self.hypotheses, tuple):
            object.__setattr__(self, "hypotheses", tuple(tuple(h) for h in self.hypotheses))
        names = [name for name, _ in self.hypotheses]
        if len(names) != len(set(names)):
            raise ValueError("hypothesis names must be unique within a proof state")

    def terms(self) -> Iterator[Tuple[bool, Term]]:
        """Yield (is_goal, term) for every hypothesis type, then the goal."""
        for _, hyp_type in self.hypotheses:
            yield False, hyp_type
        yield True, self.goal


@dataclass(frozen=True)
class LabeledExampleRecord:
    """One line of a corpus: a proof state and the tactic applied to it."""

    state: ProofState
    tactic: str
    seq: int
    module_path: str = ""

    def __post_init__(self):
        if not self.tactic:
            raise ValueError("tactic must be a non-empty string")
        if self.seq < 0:
            raise ValueError("seq must be non-negative")


@dataclass(frozen=True)
class FeatureVector:
    """
    Multiset of interned feature ids.

    `counts` is kept sorted by feature id so equal vectors compare and hash
    equal regardless of how they were built.
    """

    counts: Tuple[Tuple[int, int], ...] = ()

    @classmethod
    def from_counts(cls, counts: Mapping[int, int]) -> "FeatureVector":
        for fid, n in counts.items():
            if fid < 0 or n < 1:
                raise ValueError(f"invalid feature entry {fid}:{n}")
        return cls(tuple(sorted(counts.items())))

    @classmethod
    def from_ids(cls, ids) -> "FeatureVector":
        """Build a vector counting each occurrence in `ids`."""
        counts: Dict[int, int] = {}
        for fid in ids:
            counts[fid] = counts.get(fid, 0) + 1
        return cls.from_counts(counts)

    @cached_property
    def ids(self) -> FrozenSet[int]:
        return frozenset(fid for fid, _ in self.counts)

    def as_dict(self) -> Dict[int, int]:
        return dict(self.counts)

    def total(self) -> int:
        return sum(n for _, n in self.counts)

    def __len__(self) -> int:
        return len(self.counts)

    def __contains__(self, fid: int) -> bool:
        return fid in self.ids


@dataclass(frozen=True)
class Example:
    """A featurized proof state with its tactic hash and chronological index."""

    features: FeatureVector
    tactic: int  # 64-bit tactic hash
    seq: int


@dataclass
class CaseResult:
    """Outcome of predicting one evaluation case with one model."""

    seq: int
    model: str
    module: str
    truth: int
    predictions: List[int] = field(default_factory=list)

    @property
    def rank_of_truth(self) -> int:
        """1-based rank of the true tactic, 0 when it was not predicted."""
        try:
            return self.predictions.index(self.truth) + 1
        except ValueError:
            return 0

    def hit(self, k: int) -> bool:
        return 0 < self.rank_of_truth <= k
