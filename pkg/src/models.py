"""
Online tactic predictors behind one interface.

Every model is an immutable value: `insert` returns the updated model and
leaves the receiver usable, so any earlier version can still answer
queries. Featurization and the feature statistics are owned by the caller
(see evaluation.OnlineLearner); models only see feature vectors.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import List

from src import lshf, rforest
from src.config import KnnParams, LshfParams, RForestParams, RunConfig
from src.data_types import Example, FeatureVector
from src.features import FeatureInterner
from src.similarity import ExampleDb, knn_exact, rank_tactics


class OnlineModel(ABC):
    """Base class for incrementally trained tactic predictors."""

    name: str = "model"

    @abstractmethod
    def insert(self, example: Example, interner: FeatureInterner) -> "OnlineModel":
        """
        Learn one example.

        Args:
            example: featurized state with its tactic hash
            interner: feature statistics that already count `example`

        Returns:
            the updated model
        """

    @abstractmethod
    def predict(self, fv: FeatureVector, k: int, interner: FeatureInterner) -> List[int]:
        """Up to k tactic hashes, best first."""

    @property
    @abstractmethod
    def size(self) -> int:
        """Number of examples learned so far."""


@dataclass(frozen=True)
class KnnExactModel(OnlineModel):
    """Brute-force k-NN over every stored example."""

    params: KnnParams = field(default_factory=KnnParams)
    db: ExampleDb = field(default_factory=ExampleDb)
    name: str = "knn-exact"

    def insert(self, example: Example, interner: FeatureInterner) -> "KnnExactModel":
        return KnnExactModel(self.params, self.db.add(example, interner), self.name)

    def neighbors(self, fv: FeatureVector, k: int, interner: FeatureInterner) -> List[Example]:
        db = ExampleDb(self.db.examples, interner)
        return [e for e, _ in knn_exact(db, fv, k, self.params.similarity)]

    def predict(self, fv: FeatureVector, k: int, interner: FeatureInterner) -> List[int]:
        return rank_tactics(self.neighbors(fv, k, interner))[:k]

    @property
    def size(self) -> int:
        return len(self.db)


@dataclass(frozen=True)
class LshfModel(OnlineModel):
    """Approximate k-NN through the LSH forest."""

    params: LshfParams
    forest: lshf.LshForest
    name: str = "lshf"

    @classmethod
    def empty(cls, params: LshfParams, seed: int) -> "LshfModel":
        return cls(params, lshf.LshForest.empty(params, seed))

    def insert(self, example: Example, interner: FeatureInterner) -> "LshfModel":
        return LshfModel(self.params, lshf.insert(self.forest, example), self.name)

    def predict(self, fv: FeatureVector, k: int, interner: FeatureInterner) -> List[int]:
        return lshf.predict(
            self.forest, fv, k, self.params.resort, interner, self.params.similarity
        )

    @property
    def size(self) -> int:
        return self.forest.size


@dataclass(frozen=True)
class RForestModel(OnlineModel):
    """Online random forest; ignores the feature statistics."""

    params: RForestParams
    forest: rforest.RandomForest
    size_: int = 0
    name: str = "rforest"

    @classmethod
    def empty(cls, params: RForestParams, seed: int) -> "RForestModel":
        return cls(params, rforest.RandomForest.empty(params, seed))

    def insert(self, example: Example, interner: FeatureInterner) -> "RForestModel":
        forest = rforest.add_example_to_forest(self.forest, example)
        return RForestModel(self.params, forest, self.size_ + 1, self.name)

    def predict(self, fv: FeatureVector, k: int, interner: FeatureInterner) -> List[int]:
        return rforest.predict_forest(self.forest, fv, k)

    @property
    def size(self) -> int:
        return self.size_


MODEL_KINDS = ("knn-exact", "lshf", "rforest")


def build_model(config: RunConfig) -> OnlineModel:
    """Empty model of the configured kind, seeded from `config.seed`."""
    if config.model == "knn-exact":
        return KnnExactModel(config.knn)
    if config.model == "lshf":
        return LshfModel.empty(config.lshf, config.seed)
    if config.model == "rforest":
        return RForestModel.empty(config.rforest, config.seed)
    raise ValueError(f"unknown model kind: {config.model}")
