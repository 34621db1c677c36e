"""
Evaluation protocols, accuracy metrics and the binary-classifier exporter.

Split evaluation trains each model on every record outside the held-out
modules and then predicts the held-out records. Chronological evaluation
predicts every record from a model trained on the strictly earlier records
and only then learns it.

The harness owns featurization and model updates (OnlineLearner), so a
model can never see a record before it is scored.
"""

import itertools
import logging
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Deque, Dict, FrozenSet, Iterable, List, Literal, Optional, Sequence, Tuple

import pandas as pd
from pyrsistent import PMap, pmap, pvector
from tqdm import tqdm

from src.config import FeatureConfig, KnnParams, RForestParams
from src.data_types import CaseResult, Example, FeatureVector, LabeledExampleRecord, ProofState
from src.errors import EmptyEvaluation, EmptyTestSet, LengthMismatch
from src.features import FeatureInterner, featurize_state, record_example, tactic_hash
from src.models import KnnExactModel, OnlineModel, RForestModel
from src.rforest import RandomForest, predict_forest
from src.rng import Rng
from src.similarity import ExampleDb, knn_exact, rank_tactics

logger = logging.getLogger(__name__)

K_VALUES = (1, 10)
MAX_K = max(K_VALUES)

DEFAULT_BUCKETS = 20000
STRONG_POOL = 100

NegativeMode = Literal["strong", "random"]

TUNE_N_MAX = (10, 20, 40, 80, 160, 320, 640)
TUNE_IMPURITY = (0.1, 0.3, 0.5, 0.7, 0.9)


# ---------------------------------------------------------------------------
# Online learner: featurization state + model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OnlineLearner:
    """A model together with the feature interner and tactic names it was trained with."""

    model: OnlineModel
    features: FeatureConfig
    interner: FeatureInterner = field(default_factory=FeatureInterner)
    tactic_names: PMap = field(default_factory=pmap)  # tactic hash -> tactic text

    def featurize(self, state: ProofState) -> Tuple[FeatureVector, FeatureInterner]:
        return featurize_state(state, self.features, self.interner)

    def example_of(self, record: LabeledExampleRecord) -> Tuple[Example, FeatureInterner]:
        fv, interner = self.featurize(record.state)
        return Example(fv, tactic_hash(record.tactic), record.seq), interner

    def learn(self, record: LabeledExampleRecord) -> "OnlineLearner":
        example, interner = self.example_of(record)
        interner = record_example(interner, example.features)
        return OnlineLearner(
            model=self.model.insert(example, interner),
            features=self.features,
            interner=interner,
            tactic_names=self.tactic_names.set(example.tactic, record.tactic),
        )

    def predict(self, state: ProofState, k: int = MAX_K) -> List[int]:
        """Ranked tactic hashes. Query-only features are not kept in the interner."""
        fv, _ = self.featurize(state)
        return self.model.predict(fv, k, self.interner)

    def tactic_name(self, h: int) -> str:
        return self.tactic_names.get(h, f"{h:016x}")


def train(
    model: OnlineModel,
    features: FeatureConfig,
    records: Iterable[LabeledExampleRecord],
    progress: bool = False,
    desc: str = "Training",
) -> OnlineLearner:
    learner = OnlineLearner(model, features)
    for record in tqdm(records, desc=desc, disable=not progress):
        learner = learner.learn(record)
    return learner


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def topk_accuracy(predictions: Sequence[Sequence[int]], truths: Sequence[int], k: int) -> float:
    """Fraction of cases whose truth is among the first k predictions."""
    if len(predictions) != len(truths):
        raise LengthMismatch(len(predictions), len(truths))
    if not truths:
        raise EmptyEvaluation("no cases to score")
    hits = sum(1 for preds, truth in zip(predictions, truths) if truth in list(preds)[:k])
    return hits / len(truths)


def union_metric(successes_a: Sequence[bool], successes_b: Sequence[bool]) -> float:
    """Fraction of cases solved by at least one of two models."""
    if len(successes_a) != len(successes_b):
        raise LengthMismatch(len(successes_a), len(successes_b))
    if not successes_a:
        raise EmptyEvaluation("no cases to score")
    return sum(1 for a, b in zip(successes_a, successes_b) if a or b) / len(successes_a)


@dataclass
class ModelScore:
    top1: float
    top10: float
    n_cases: int


def _score(cases: Sequence[CaseResult]) -> ModelScore:
    if not cases:
        return ModelScore(0.0, 0.0, 0)
    preds = [c.predictions for c in cases]
    truths = [c.truth for c in cases]
    return ModelScore(
        top1=topk_accuracy(preds, truths, 1),
        top10=topk_accuracy(preds, truths, 10),
        n_cases=len(cases),
    )


@dataclass
class EvalReport:
    """Top-1/top-10 per model, per module and for every model pair."""

    protocol: str
    models: Dict[str, ModelScore] = field(default_factory=dict)
    per_module: Dict[str, Dict[str, ModelScore]] = field(default_factory=dict)
    union: Dict[str, Dict[str, float]] = field(default_factory=dict)
    cases: List[CaseResult] = field(default_factory=list)

    @classmethod
    def from_cases(cls, protocol: str, cases_by_model: Dict[str, List[CaseResult]]) -> "EvalReport":
        report = cls(protocol=protocol)
        for name, cases in cases_by_model.items():
            report.models[name] = _score(cases)
            report.cases.extend(cases)
            by_module: Dict[str, List[CaseResult]] = {}
            for c in cases:
                by_module.setdefault(c.module, []).append(c)
            for module, module_cases in sorted(by_module.items()):
                report.per_module.setdefault(module, {})[name] = _score(module_cases)

        for a, b in itertools.combinations(cases_by_model, 2):
            ca, cb = cases_by_model[a], cases_by_model[b]
            if not ca:
                continue
            report.union[f"{a}|{b}"] = {
                f"union_top{k}": union_metric([c.hit(k) for c in ca], [c.hit(k) for c in cb])
                for k in K_VALUES
            }
        return report

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "models": {name: asdict(s) for name, s in self.models.items()},
            "per_module": {
                module: {name: asdict(s) for name, s in scores.items()}
                for module, scores in self.per_module.items()
            },
            "union": self.union,
        }


# ---------------------------------------------------------------------------
# Protocols
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    """
    Which records are held out for testing.

    A record is a test record if its module is listed in `test_modules` or
    its seq in `test_seqs`; everything else is training data.
    """

    test_modules: FrozenSet[str] = frozenset()
    test_seqs: FrozenSet[int] = frozenset()
    validation_fraction: float = 0.2

    def __post_init__(self):
        if not 0 < self.validation_fraction < 1:
            raise ValueError("validation_fraction must lie in (0, 1)")
        object.__setattr__(self, "test_modules", frozenset(self.test_modules))
        object.__setattr__(self, "test_seqs", frozenset(self.test_seqs))

    def is_test(self, record: LabeledExampleRecord) -> bool:
        return record.module_path in self.test_modules or record.seq in self.test_seqs

    def partition(
        self, records: Sequence[LabeledExampleRecord]
    ) -> Tuple[List[LabeledExampleRecord], List[LabeledExampleRecord]]:
        train_part, test_part = [], []
        for r in records:
            (test_part if self.is_test(r) else train_part).append(r)
        return train_part, test_part

    @classmethod
    def from_test_fraction(
        cls, records: Sequence[LabeledExampleRecord], fraction: float, validation_fraction: float = 0.2
    ) -> "SplitSpec":
        """Hold out the chronologically last `fraction` of every module."""
        if not 0 < fraction < 1:
            raise ValueError("test fraction must lie in (0, 1)")
        by_module: Dict[str, List[int]] = {}
        for r in records:
            by_module.setdefault(r.module_path, []).append(r.seq)
        held_out = set()
        for seqs in by_module.values():
            seqs.sort()
            n_test = int(round(len(seqs) * fraction))
            if n_test:
                held_out.update(seqs[-n_test:])
        return cls(test_seqs=frozenset(held_out), validation_fraction=validation_fraction)


def _case(record: LabeledExampleRecord, name: str, predictions: List[int]) -> CaseResult:
    return CaseResult(
        seq=record.seq,
        model=name,
        module=record.module_path,
        truth=tactic_hash(record.tactic),
        predictions=list(predictions),
    )


def split_eval(
    records: Sequence[LabeledExampleRecord],
    spec: SplitSpec,
    models: Sequence[OnlineModel],
    features: FeatureConfig,
    progress: bool = False,
) -> EvalReport:
    """
    Train every model on the non-test records (corpus order), then predict
    each test record.

    Raises:
        EmptyTestSet: no record matches the split
    """
    train_part, test_part = spec.partition(records)
    if not test_part:
        raise EmptyTestSet("the split selects no test records")
    logger.info("split: %d training, %d test records", len(train_part), len(test_part))

    cases: Dict[str, List[CaseResult]] = {}
    for model in models:
        learner = train(model, features, train_part, progress, desc=f"Training {model.name}")
        cases[model.name] = [
            _case(r, model.name, learner.predict(r.state))
            for r in tqdm(test_part, desc=f"Testing {model.name}", disable=not progress)
        ]
    return EvalReport.from_cases("split", cases)


def chrono_eval(
    records: Sequence[LabeledExampleRecord],
    models: Sequence[OnlineModel],
    features: FeatureConfig,
    progress: bool = False,
) -> EvalReport:
    """Predict each record from everything before it, then learn it."""
    ordered = sorted(records, key=lambda r: r.seq)
    cases: Dict[str, List[CaseResult]] = {}
    for model in models:
        learner = OnlineLearner(model, features)
        model_cases = []
        for r in tqdm(ordered, desc=f"Chrono {model.name}", disable=not progress):
            model_cases.append(_case(r, model.name, learner.predict(r.state)))
            learner = learner.learn(r)
        cases[model.name] = model_cases
    return EvalReport.from_cases("chrono", cases)


def tune_rforest(
    records: Sequence[LabeledExampleRecord],
    spec: SplitSpec,
    features: FeatureConfig,
    seed: int,
    n_max_grid: Sequence[int] = TUNE_N_MAX,
    impurity_grid: Sequence[float] = TUNE_IMPURITY,
    progress: bool = False,
) -> pd.DataFrame:
    """
    Grid search over (n_max, impurity) on a random train/validation split of
    the non-test records.

    One forest is trained per impurity value with the largest n_max. Tree j
    of a forest only depends on the seed and the examples inserted after it
    was planted, so the first m trees are exactly the forest capped at m.
    """
    pool, _ = spec.partition(records)
    if len(pool) < 2:
        raise EmptyEvaluation("not enough non-test records to tune on")
    gen = Rng(seed).spawn(0).generator()
    order = gen.permutation(len(pool))
    n_val = max(1, int(round(len(pool) * spec.validation_fraction)))
    val_idx = set(int(i) for i in order[:n_val])
    train_part = [r for i, r in enumerate(pool) if i not in val_idx]
    val_part = [r for i, r in enumerate(pool) if i in val_idx]

    largest = max(n_max_grid)
    rows = []
    for impurity in impurity_grid:
        model = RForestModel.empty(RForestParams(n_max=largest, impurity=impurity), seed)
        learner = train(model, features, train_part, progress, desc=f"impurity {impurity}")
        forest: RandomForest = learner.model.forest
        queries = [(learner.featurize(r.state)[0], tactic_hash(r.tactic)) for r in val_part]
        for n_max in sorted(n_max_grid):
            capped = RandomForest(
                trees=pvector(forest.trees[:n_max]),
                n_max=n_max,
                impurity=impurity,
                rng=forest.rng,
            )
            preds = [predict_forest(capped, fv, MAX_K) for fv, _ in queries]
            truths = [t for _, t in queries]
            rows.append({
                "n_max": n_max,
                "impurity": impurity,
                "n_trees": len(capped.trees),
                "top1": topk_accuracy(preds, truths, 1),
                "top10": topk_accuracy(preds, truths, 10),
            })
    return pd.DataFrame(rows)


# ---------------------------------------------------------------------------
# Binary dataset export
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExportRow:
    label: int
    qid: int
    entries: Tuple[Tuple[int, int], ...]  # strictly increasing indices

    def render(self) -> str:
        body = " ".join(f"{i}:{v}" for i, v in self.entries)
        return f"{self.label} qid:{self.qid} {body}".rstrip()


@dataclass
class ExportReport:
    n_states: int = 0
    positives: int = 0
    negatives: int = 0
    insufficient: int = 0  # states that got fewer than `ratio` negatives
    insufficient_seqs: List[int] = field(default_factory=list)


def hashed_row(
    label: int, qid: int, fv: FeatureVector, tactic: int, buckets: int = DEFAULT_BUCKETS
) -> ExportRow:
    """State features fold into [0, buckets); the tactic takes one index in [buckets, 2*buckets)."""
    state: Dict[int, int] = {}
    for fid, count in fv.counts:
        b = fid % buckets
        state[b] = state.get(b, 0) + count
    entries = tuple(sorted(state.items())) + ((buckets + tactic % buckets, 1),)
    return ExportRow(label, qid, entries)


def export_binary_dataset(
    records: Sequence[LabeledExampleRecord],
    features: FeatureConfig,
    ratio: int,
    mode: NegativeMode,
    rng: Rng,
    buckets: int = DEFAULT_BUCKETS,
    window: Optional[int] = None,
    knn: KnnParams = KnnParams(),
    progress: bool = False,
) -> Tuple[List[ExportRow], ExportReport]:
    """
    One positive row and up to `ratio` negative rows per record.

    Strong negatives are sampled from the tactics of the best 100 exact k-NN
    neighbours among the earlier records (only the last `window` of them
    when set); random negatives from every tactic of the corpus, or of the
    window. The true tactic is never a negative.
    """
    if ratio < 1:
        raise ValueError("ratio must be positive")
    if buckets < 1:
        raise ValueError("buckets must be positive")
    ordered = sorted(records, key=lambda r: r.seq)
    all_tactics = sorted({tactic_hash(r.tactic) for r in ordered})

    learner = OnlineLearner(KnnExactModel(knn), features)
    recent: Deque[Example] = deque(maxlen=window) if window else deque()
    rows: List[ExportRow] = []
    report = ExportReport()

    for j, record in enumerate(tqdm(ordered, desc="Exporting", disable=not progress)):
        example, _ = learner.example_of(record)
        truth = example.tactic

        if mode == "strong":
            if window:
                db = ExampleDb(pvector(recent), learner.interner)
                neighbors = [e for e, _ in knn_exact(db, example.features, STRONG_POOL, knn.similarity)]
            else:
                neighbors = learner.model.neighbors(example.features, STRONG_POOL, learner.interner)
            candidates = [t for t in rank_tactics(neighbors) if t != truth]
        elif mode == "random":
            pool = sorted({e.tactic for e in recent}) if window else all_tactics
            candidates = [t for t in pool if t != truth]
        else:
            raise ValueError(f"unknown negative mode: {mode}")

        gen = rng.spawn(j).generator()
        n_neg = min(ratio, len(candidates))
        chosen = gen.choice(len(candidates), size=n_neg, replace=False) if n_neg else []
        rows.append(hashed_row(1, record.seq, example.features, truth, buckets))
        for idx in chosen:
            rows.append(hashed_row(0, record.seq, example.features, candidates[int(idx)], buckets))

        report.n_states += 1
        report.positives += 1
        report.negatives += n_neg
        if n_neg < ratio:
            report.insufficient += 1
            report.insufficient_seqs.append(record.seq)

        learner = learner.learn(record)
        if window:
            recent.append(example)

    if report.insufficient:
        logger.warning(
            "%d of %d states had fewer than %d negative candidates",
            report.insufficient, report.n_states, ratio,
        )
    return rows, report


def write_rows(rows: Iterable[ExportRow], stream) -> int:
    n = 0
    for row in rows:
        stream.write(row.render() + "\n")
        n += 1
    return n
