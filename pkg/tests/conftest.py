"""Shared helpers for the test suite."""

import os
import sys

# Add project root to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.data_types import Example, FeatureVector, ProofState
from src.features import Feature, interner_from_features
from src.terms import parse_term


def state(goal: str, *hyps) -> ProofState:
    """ProofState from s-expression text; hyps are (name, text) pairs."""
    return ProofState(tuple((name, parse_term(t)) for name, t in hyps), parse_term(goal))


def example(ids, tactic: int = 1, seq: int = 0) -> Example:
    return Example(FeatureVector.from_ids(ids), tactic, seq)


def interner_with(doc_count, total):
    """Interner over features x0, x1, ... with the given document counts."""
    return interner_from_features([Feature(f"x{i}") for i in range(len(doc_count))], doc_count, total)
