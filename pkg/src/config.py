"""
Configuration for featurization, models and evaluation runs.

Defaults are the tuned values: 11 tries of depth 20 for the LSH forest,
320 trees (160 for top-1) with impurity threshold 0.5 for the random forest,
and k = 10 predictions.
"""

import os
from dataclasses import field
from typing import Annotated, Literal, Optional

from dotenv import load_dotenv
from pydantic import Field
from pydantic.dataclasses import dataclass

SEED_ENV_VAR = "TACTIC_FOREST_SEED"
FALLBACK_SEED = 42

ModelKind = Literal["knn-exact", "lshf", "rforest"]
SimilarityName = Literal["plain", "tfidf"]

FEATURE_LETTERS = {
    "O": "original",
    "W": "walks",
    "V": "vertical",
    "T": "structure",
    "S": "separation",
    "C": "counts",
}


def default_seed() -> int:
    """Seed from the environment (or a .env file), else the fallback."""
    load_dotenv()
    value = os.environ.get(SEED_ENV_VAR, "")
    try:
        return int(value)
    except ValueError:
        return FALLBACK_SEED


@dataclass(frozen=True)
class FeatureConfig:
    """Which feature classes are extracted from a proof state."""

    original: bool = True     # O: identifiers and adjacent pairs
    walks: bool = False       # W: top-down walks of up to 3 nodes
    vertical: bool = False    # V: root-to-atom abstracted walks
    structure: bool = False   # T: depth-2 top-level structure
    separation: bool = False  # S: separate hypothesis/goal feature spaces
    counts: bool = False      # C: keep occurrence counts

    def __post_init__(self):
        if not (self.original or self.walks or self.vertical or self.structure):
            raise ValueError("enable at least one of the O, W, V, T feature classes")

    @classmethod
    def from_letters(cls, letters: str) -> "FeatureConfig":
        """Parse a flag such as "O,W,S" (commas and case optional)."""
        chosen = {c for c in letters.upper() if c.isalpha()}
        unknown = chosen - FEATURE_LETTERS.keys()
        if unknown:
            raise ValueError(f"unknown feature classes: {''.join(sorted(unknown))}")
        return cls(**{name: letter in chosen for letter, name in FEATURE_LETTERS.items()})

    def letters(self) -> str:
        return ",".join(l for l, name in FEATURE_LETTERS.items() if getattr(self, name))

    def to_flags(self) -> int:
        return sum(1 << i for i, name in enumerate(FEATURE_LETTERS.values()) if getattr(self, name))

    @classmethod
    def from_flags(cls, flags: int) -> "FeatureConfig":
        return cls(**{name: bool(flags >> i & 1) for i, name in enumerate(FEATURE_LETTERS.values())})


@dataclass(frozen=True)
class LshfParams:
    """LSH forest hyperparameters."""

    n_tries: Annotated[int, Field(ge=1, le=255)] = 11
    max_depth: Annotated[int, Field(ge=1, le=64)] = 20
    resort: bool = True
    similarity: SimilarityName = "tfidf"


@dataclass(frozen=True)
class RForestParams:
    """Online random forest hyperparameters."""

    n_max: Annotated[int, Field(ge=1)] = 320
    impurity: Annotated[float, Field(ge=0.0, le=1.0)] = 0.5
    max_leaf_examples: Optional[Annotated[int, Field(ge=2)]] = None  # soft cap, off by default


@dataclass(frozen=True)
class KnnParams:
    """Brute-force k-NN baseline."""

    similarity: SimilarityName = "tfidf"


@dataclass
class RunConfig:
    """Everything one CLI invocation needs."""

    model: ModelKind = "lshf"
    features: FeatureConfig = field(default_factory=FeatureConfig)
    lshf: LshfParams = field(default_factory=LshfParams)
    rforest: RForestParams = field(default_factory=RForestParams)
    knn: KnnParams = field(default_factory=KnnParams)
    k: Annotated[int, Field(ge=1)] = 10
    seed: Annotated[int, Field(ge=0)] = FALLBACK_SEED


# Feature presets: the original features alone and each single addition (O ⊕ x)
ORIGINAL_FEATURES = FeatureConfig()
ORIGINAL_WALKS = FeatureConfig(walks=True)
ORIGINAL_VERTICAL = FeatureConfig(vertical=True)
ORIGINAL_STRUCTURE = FeatureConfig(structure=True)
ORIGINAL_SEPARATION = FeatureConfig(separation=True)
ORIGINAL_COUNTS = FeatureConfig(counts=True)
ALL_FEATURES = FeatureConfig(
    walks=True, vertical=True, structure=True, separation=True, counts=True
)

FEATURE_ABLATIONS = {
    "O": ORIGINAL_FEATURES,
    "O+W": ORIGINAL_WALKS,
    "O+V": ORIGINAL_VERTICAL,
    "O+T": ORIGINAL_STRUCTURE,
    "O+S": ORIGINAL_SEPARATION,
    "O+C": ORIGINAL_COUNTS,
    "all": ALL_FEATURES,
}

# Model presets
KNN_EXACT = RunConfig(model="knn-exact")
LSHF_DEFAULT = RunConfig(model="lshf")
RFOREST_TOP1 = RunConfig(model="rforest", rforest=RForestParams(n_max=160))
RFOREST_TOP10 = RunConfig(model="rforest", rforest=RForestParams(n_max=320))
