"""
Synthetic corpora for benchmarks, demos and tests.

clustered_corpus   states of a cluster share symbols and a tactic
locality_corpus    modules of short proof episodes with near-duplicate
                   adjacent states and episode-local tactics
separable_corpus   two tactics decided by the presence of one atom
feature_database   raw feature vectors (no terms) around random centres
"""

from typing import List, Sequence, Tuple

import numpy as np

from src.data_types import App, Atom, Example, FeatureVector, LabeledExampleRecord, ProofState, Term
from src.features import Feature, FeatureInterner, interner_from_features
from src.rng import Rng

MARKER = "D"


def _app(head: str, *args: Term) -> App:
    return App(Atom(head), tuple(args))


def _pick(gen: np.random.Generator, pool: Sequence[str], n: int) -> List[str]:
    return [pool[int(i)] for i in gen.choice(len(pool), size=n, replace=False)]


def clustered_corpus(
    n: int = 500, n_clusters: int = 10, n_modules: int = 5, seed: int = 0
) -> List[LabeledExampleRecord]:
    """
    Every cluster owns eight symbols and one tactic; a state uses four of
    its cluster's symbols plus one shared noise atom.
    """
    gen = Rng(seed).generator()
    noise = [f"n{i}" for i in range(20)]
    records = []
    for seq in range(n):
        c = int(gen.integers(n_clusters))
        symbols = _pick(gen, [f"c{c}_s{j}" for j in range(8)], 4)
        goal = _app(
            f"c{c}_eq",
            _app(symbols[0], Atom(symbols[1])),
            _app(symbols[2], Atom(symbols[3]), Atom(noise[int(gen.integers(len(noise)))])),
        )
        hyps = ((f"H{c}", _app(symbols[1], Atom(symbols[3]))),)
        records.append(LabeledExampleRecord(
            state=ProofState(hyps, goal),
            tactic=f"apply lemma_{c}",
            seq=seq,
            module_path=f"Synthetic.M{seq % n_modules}",
        ))
    return records


def locality_corpus(
    n_modules: int = 6,
    episodes_per_module: int = 5,
    episode_length: int = 12,
    local_tactics: int = 3,
    global_share: float = 0.2,
    seed: int = 0,
) -> List[LabeledExampleRecord]:
    """
    Modules are written one after another, each as a run of proof episodes.

    An episode fixes a small set of symbols and `local_tactics` tactics that
    occur nowhere else; each step varies one marker atom that decides which
    local tactic is used. A `global_share` of steps use one of four
    corpus-wide tactics instead, decided by a global marker.
    """
    gen = Rng(seed).generator()
    shared = [f"lib{i}" for i in range(30)]
    records = []
    seq = 0
    for m in range(n_modules):
        module = f"Locality.M{m}"
        for e in range(episodes_per_module):
            tag = f"m{m}e{e}"
            symbols = [f"{tag}_s{j}" for j in range(4)]
            background = _pick(gen, shared, 3)
            for _ in range(episode_length):
                if gen.random() < global_share:
                    g = int(gen.integers(4))
                    marker, tactic = f"glob{g}", f"global_tactic_{g}"
                else:
                    t = int(gen.integers(local_tactics))
                    marker, tactic = f"{tag}_k{t}", f"{tag}_tactic_{t}"
                goal = _app(
                    symbols[0],
                    _app(symbols[1], Atom(symbols[2]), Atom(marker)),
                    Atom(background[int(gen.integers(3))]),
                )
                hyps = (("H", _app(symbols[3], Atom(background[0]))),)
                records.append(LabeledExampleRecord(ProofState(hyps, goal), tactic, seq, module))
                seq += 1
    return records


def separable_corpus(n: int = 1200, seed: int = 0) -> List[LabeledExampleRecord]:
    """Tactic is "split" when the goal mentions the marker atom, "intro" otherwise."""
    gen = Rng(seed).generator()
    universe = [f"u{i}" for i in range(8)]
    records = []
    for seq in range(n):
        atoms = [Atom(a) for a in _pick(gen, universe, 3)]
        has_marker = bool(gen.random() < 0.5)
        if has_marker:
            atoms.insert(int(gen.integers(len(atoms) + 1)), Atom(MARKER))
        records.append(LabeledExampleRecord(
            state=ProofState((), _app("goal", *atoms)),
            tactic="split" if has_marker else "intro",
            seq=seq,
        ))
    return records


def feature_database(
    n: int = 1000,
    universe: int = 500,
    n_clusters: int = 25,
    per_example: int = 15,
    seed: int = 0,
) -> Tuple[List[Example], FeatureInterner]:
    """
    Examples over feature ids 0..universe-1 drawn around random cluster
    centres, plus an interner whose statistics count all of them.
    """
    gen = Rng(seed).generator()
    centres = [gen.choice(universe, size=per_example, replace=False) for _ in range(n_clusters)]
    examples = []
    doc_count = [0] * universe
    for seq in range(n):
        c = int(gen.integers(n_clusters))
        keep = [int(x) for x in centres[c] if gen.random() < 0.8]
        extra = [int(x) for x in gen.choice(universe, size=3, replace=False)]
        ids = set(keep) | set(extra)
        for x in ids:
            doc_count[x] += 1
        examples.append(Example(FeatureVector.from_ids(ids), tactic=c, seq=seq))
    interner = interner_from_features([Feature(f"x{i}") for i in range(universe)], doc_count, n)
    return examples, interner


def perturb(fv: FeatureVector, gen: np.random.Generator, universe: int, flips: int = 2) -> FeatureVector:
    """Drop up to `flips` features and add as many random ones."""
    ids = sorted(fv.ids)
    drop = set(int(i) for i in gen.choice(len(ids), size=min(flips, len(ids)), replace=False)) if ids else set()
    kept = {x for i, x in enumerate(ids) if i not in drop}
    kept.update(int(x) for x in gen.choice(universe, size=flips, replace=False))
    return FeatureVector.from_ids(kept)
