"""
Proof-state featurization.

Feature classes (enabled through FeatureConfig):
  O  identifiers and parent-child identifier pairs        f, g, f-g
  W  top-down walks of 1-3 nodes with syntax roles         f:AppFun(g:AppFun)
  V  root-to-atom walks with inner nodes abstracted        AppFun(AppFun(a:AppArg))
  T  top-level structure cut at depth 2 with arities       X2(X2(X),X)
  S  hypothesis and goal features live in separate spaces
  C  occurrence counts are kept (otherwise every count is 1)

Curried heads are flattened: ((f a) b) is treated as f applied to [a, b].
"""

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pyrsistent import PMap, PVector, pmap, pvector

from src.config import FeatureConfig
from src.data_types import App, Atom, FeatureVector, ProofState, Term
from src.errors import UnknownFeatureId

FUN_ROLE = "AppFun"
ARG_ROLE = "AppArg"
STRUCTURE_DEPTH = 2

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


class Origin(Enum):
    HYPOTHESIS = "hyp"
    GOAL = "goal"


@dataclass(frozen=True)
class Feature:
    """A feature string plus the space it lives in (None when spaces are merged)."""

    text: str
    origin: Optional[Origin] = None


def tactic_hash(tactic: str) -> int:
    """64-bit FNV-1a of the UTF-8 tactic text."""
    h = _FNV_OFFSET
    for byte in tactic.encode("utf-8"):
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def tactic_hex(h: int) -> str:
    return f"{h:016x}"


def _spine(term: Term) -> Tuple[str, Tuple[Term, ...]]:
    """Head identifier and flattened argument list of an application."""
    args: Tuple[Term, ...] = ()
    while isinstance(term, App):
        args = term.args + args
        term = term.head
    return term.name, args


def extract_original(term: Term) -> List[str]:
    """Identifiers plus one `parent-child` pair per identifier edge."""
    out: List[str] = []

    def visit(t: Term) -> str:
        if isinstance(t, Atom):
            out.append(t.name)
            return t.name
        head, args = _spine(t)
        out.append(head)
        for arg in args:
            child = visit(arg)
            out.append(f"{head}-{child}")
        return head

    visit(term)
    return out


def _role_tree(term: Term) -> Tuple[str, list]:
    if isinstance(term, Atom):
        return f"{term.name}:{ARG_ROLE}", []
    head, args = _spine(term)
    return f"{head}:{FUN_ROLE}", [_role_tree(a) for a in args]


def extract_walks(term: Term) -> List[str]:
    """Every downward walk of 1, 2 or 3 nodes, starting at every node."""
    out: List[str] = []
    stack = [_role_tree(term)]
    while stack:
        label, children = stack.pop()
        out.append(label)
        for child_label, grandchildren in children:
            out.append(f"{label}({child_label})")
            for grand_label, _ in grandchildren:
                out.append(f"{label}({child_label}({grand_label}))")
        stack.extend(reversed(children))
    return out


def extract_vertical(term: Term) -> List[str]:
    """One feature per root-to-atom path; inner nodes become their role."""
    out: List[str] = []

    def visit(t: Term, depth: int) -> None:
        if isinstance(t, Atom):
            out.append(f"{FUN_ROLE}(" * depth + f"{t.name}:{ARG_ROLE}" + ")" * depth)
            return
        _, args = _spine(t)
        for arg in args:
            visit(arg, depth + 1)

    visit(term, 0)
    return out


def extract_structure(term: Term, max_depth: int = STRUCTURE_DEPTH) -> str:
    """Top-level shape: atoms become X, applications Xk, everything at max_depth merges into X."""

    def render(t: Term, depth: int) -> str:
        if isinstance(t, Atom):
            return "X"
        _, args = _spine(t)
        if depth + 1 >= max_depth:
            return f"X{len(args)}(X)"
        return f"X{len(args)}(" + ",".join(render(a, depth + 1) for a in args) + ")"

    return render(term, 0)


def term_features(term: Term, cfg: FeatureConfig) -> List[str]:
    """Feature strings of one term for the enabled classes (multiset)."""
    out: List[str] = []
    if cfg.original:
        out.extend(extract_original(term))
    if cfg.walks:
        out.extend(extract_walks(term))
    if cfg.vertical:
        out.extend(extract_vertical(term))
    if cfg.structure:
        out.append(extract_structure(term))
    return out


@dataclass(frozen=True)
class FeatureInterner:
    """
    Persistent bijection between features and integer ids, plus the
    document frequencies needed for TfIdf.

    Every update returns a new interner; old versions stay valid.
    """

    table: PMap = field(default_factory=pmap)             # Feature -> id
    features: PVector = field(default_factory=pvector)    # id -> Feature
    doc_count: PVector = field(default_factory=pvector)   # id -> examples containing it
    total_examples: int = 0

    @property
    def next_id(self) -> int:
        return len(self.features)

    def lookup(self, feature: Feature) -> Optional[int]:
        return self.table.get(feature)

    def intern(self, feature: Feature) -> Tuple[int, "FeatureInterner"]:
        fid = self.table.get(feature)
        if fid is not None:
            return fid, self
        fid = len(self.features)
        return fid, FeatureInterner(
            table=self.table.set(feature, fid),
            features=self.features.append(feature),
            doc_count=self.doc_count.append(0),
            total_examples=self.total_examples,
        )

    def feature(self, fid: int) -> Feature:
        self.check(fid)
        return self.features[fid]

    def documents(self, fid: int) -> int:
        self.check(fid)
        return self.doc_count[fid]

    def check(self, fid: int) -> None:
        if not 0 <= fid < len(self.features):
            raise UnknownFeatureId(fid)


def featurize_state(
    state: ProofState, cfg: FeatureConfig, interner: FeatureInterner
) -> Tuple[FeatureVector, FeatureInterner]:
    """
    Featurize a proof state.

    New features are interned (the returned interner may be larger) but the
    document counts are left alone; call record_example once the example is
    actually added to a database.
    """
    counts: Dict[int, int] = Counter()
    for is_goal, term in state.terms():
        origin = None
        if cfg.separation:
            origin = Origin.GOAL if is_goal else Origin.HYPOTHESIS
        for text in term_features(term, cfg):
            fid, interner = interner.intern(Feature(text, origin))
            counts[fid] += 1
    if not cfg.counts:
        counts = {fid: 1 for fid in counts}
    return FeatureVector.from_counts(counts), interner


def record_example(interner: FeatureInterner, fv: FeatureVector) -> FeatureInterner:
    """Count one more example and bump the document count of each distinct feature."""
    for fid in fv.ids:
        interner.check(fid)
    doc_count = interner.doc_count.evolver()
    for fid in fv.ids:
        doc_count[fid] += 1
    return FeatureInterner(
        table=interner.table,
        features=interner.features,
        doc_count=doc_count.persistent(),
        total_examples=interner.total_examples + 1,
    )


def interner_from_features(features, doc_count, total_examples: int) -> FeatureInterner:
    """Rebuild an interner from its id-ordered feature list (snapshot loading)."""
    features = pvector(features)
    return FeatureInterner(
        table=pmap({f: i for i, f in enumerate(features)}),
        features=features,
        doc_count=pvector(doc_count),
        total_examples=total_examples,
    )
