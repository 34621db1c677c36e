"""
Binary model snapshots.

Layout (little endian):

    magic "TFSN" | u16 version | u8 model kind | u64 seed | u8 feature flags
    model parameters
    interner: features (origin, text) with document counts, total examples
    tactic name table: (hash, text) sorted by hash
    example store: (seq, tactic hash, sparse counts) in insertion order
    model body: nothing for k-NN and the LSH forest (both are rebuilt from
                the example store), trees in preorder for the random forest

Saving the same learner twice produces identical bytes, and a loaded
learner predicts exactly like the saved one.
"""

import logging
import struct
from pathlib import Path
from typing import Dict, List, Tuple, Union

from pyrsistent import pmap, pvector

from src import lshf
from src.config import FeatureConfig, KnnParams, LshfParams, RForestParams
from src.data_types import Example, FeatureVector
from src.errors import SnapshotError
from src.evaluation import OnlineLearner
from src.features import Feature, Origin, interner_from_features
from src.models import KnnExactModel, LshfModel, OnlineModel, RForestModel
from src.rforest import DecisionTree, RandomForest, SplitRule, TreeLeaf, TreeNode, iter_leaves
from src.rng import Rng
from src.similarity import ExampleDb

logger = logging.getLogger(__name__)

MAGIC = b"TFSN"
VERSION = 1

KIND_CODES = {"knn-exact": 0, "lshf": 1, "rforest": 2}
KIND_NAMES = {v: k for k, v in KIND_CODES.items()}
ORIGIN_CODES = {None: 0, Origin.HYPOTHESIS: 1, Origin.GOAL: 2}
ORIGIN_NAMES = {v: k for k, v in ORIGIN_CODES.items()}
SIMILARITY_CODES = {"plain": 0, "tfidf": 1}
SIMILARITY_NAMES = {v: k for k, v in SIMILARITY_CODES.items()}

_LEAF, _NODE = 0, 1
_MASK64 = (1 << 64) - 1


class _Writer:
    def __init__(self):
        self.parts: List[bytes] = []

    def pack(self, fmt: str, *values) -> None:
        self.parts.append(struct.pack("<" + fmt, *values))

    def text(self, s: str) -> None:
        data = s.encode("utf-8")
        self.pack("I", len(data))
        self.parts.append(data)

    def getvalue(self) -> bytes:
        return b"".join(self.parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def unpack(self, fmt: str) -> tuple:
        fmt = "<" + fmt
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.data):
            raise SnapshotError("snapshot is truncated")
        values = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return values

    def one(self, fmt: str):
        return self.unpack(fmt)[0]

    def text(self) -> str:
        n = self.one("I")
        if self.pos + n > len(self.data):
            raise SnapshotError("snapshot is truncated")
        raw = self.data[self.pos:self.pos + n]
        self.pos += n
        return raw.decode("utf-8")


def _kind_of(model: OnlineModel) -> str:
    if isinstance(model, KnnExactModel):
        return "knn-exact"
    if isinstance(model, LshfModel):
        return "lshf"
    if isinstance(model, RForestModel):
        return "rforest"
    raise SnapshotError(f"cannot snapshot model of type {type(model).__name__}")


def _model_examples(model: OnlineModel) -> List[Example]:
    if isinstance(model, KnnExactModel):
        return list(model.db.examples)
    if isinstance(model, LshfModel):
        return list(model.forest.examples)
    by_seq = {}
    for tree in model.forest.trees:
        for _, leaf in iter_leaves(tree):
            for e in leaf.examples:
                by_seq[e.seq] = e
    return [by_seq[s] for s in sorted(by_seq)]


def _write_tree(w: _Writer, tree: DecisionTree, index: Dict[int, int]) -> None:
    stack = [tree]
    while stack:
        node = stack.pop()
        if isinstance(node, TreeLeaf):
            w.pack("BQI", _LEAF, node.label, len(node.examples))
            for e in node.examples:
                w.pack("I", index[e.seq])
        else:
            w.pack("BI", _NODE, node.rule.feature)
            stack.append(node.right)
            stack.append(node.left)


def _read_tree(r: _Reader, examples: List[Example]) -> DecisionTree:
    tag = r.one("B")
    if tag == _LEAF:
        label, n = r.unpack("QI")
        try:
            stored = [examples[r.one("I")] for _ in range(n)]
        except IndexError:
            raise SnapshotError("tree leaf references a missing example") from None
        return TreeLeaf(label, pvector(stored))
    if tag == _NODE:
        feature = r.one("I")
        left = _read_tree(r, examples)
        right = _read_tree(r, examples)
        return TreeNode(SplitRule(feature), left, right)
    raise SnapshotError(f"unknown tree tag {tag}")


def dumps(learner: OnlineLearner, seed: int) -> bytes:
    """Encode a trained learner; `seed` is the seed the model was built with."""
    model = learner.model
    kind = _kind_of(model)
    if kind == "lshf":
        seed = model.forest.family.seed
    w = _Writer()
    w.pack("4sHBQB", MAGIC, VERSION, KIND_CODES[kind], seed & _MASK64, learner.features.to_flags())

    if kind == "knn-exact":
        w.pack("B", SIMILARITY_CODES[model.params.similarity])
    elif kind == "lshf":
        p = model.params
        w.pack("BBBB", p.n_tries, p.max_depth, int(p.resort), SIMILARITY_CODES[p.similarity])
    else:
        p = model.params
        forest = model.forest
        w.pack("IdII", p.n_max, p.impurity, p.max_leaf_examples or 0, model.size)
        w.pack("QHQ", forest.rng.seed & _MASK64, len(forest.rng.path), forest.rng.counter)
        for key in forest.rng.path:
            w.pack("Q", key)

    interner = learner.interner
    w.pack("II", len(interner.features), interner.total_examples)
    for feature, df in zip(interner.features, interner.doc_count):
        w.pack("BI", ORIGIN_CODES[feature.origin], df)
        w.text(feature.text)

    names = sorted(learner.tactic_names.items())
    w.pack("I", len(names))
    for h, text in names:
        w.pack("Q", h)
        w.text(text)

    examples = _model_examples(model)
    w.pack("I", len(examples))
    for e in examples:
        w.pack("QQI", e.seq, e.tactic, len(e.features.counts))
        for fid, count in e.features.counts:
            w.pack("II", fid, count)

    if kind == "rforest":
        index = {e.seq: i for i, e in enumerate(examples)}
        w.pack("I", len(model.forest.trees))
        for tree in model.forest.trees:
            _write_tree(w, tree, index)
    return w.getvalue()


def _decode(data: bytes) -> Tuple[OnlineLearner, int]:
    r = _Reader(data)
    magic, version, kind_code, seed, flags = r.unpack("4sHBQB")
    if magic != MAGIC:
        raise SnapshotError("not a model snapshot (bad magic)")
    if version != VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    if kind_code not in KIND_NAMES:
        raise SnapshotError(f"unknown model kind {kind_code}")
    kind = KIND_NAMES[kind_code]
    features = FeatureConfig.from_flags(flags)

    if kind == "knn-exact":
        params = KnnParams(similarity=SIMILARITY_NAMES[r.one("B")])
    elif kind == "lshf":
        n_tries, max_depth, resort, sim = r.unpack("BBBB")
        params = LshfParams(
            n_tries=n_tries, max_depth=max_depth, resort=bool(resort), similarity=SIMILARITY_NAMES[sim]
        )
    else:
        n_max, impurity, cap, size = r.unpack("IdII")
        params = RForestParams(n_max=n_max, impurity=impurity, max_leaf_examples=cap or None)
        rng_seed, path_len, counter = r.unpack("QHQ")
        rng = Rng(rng_seed, tuple(r.one("Q") for _ in range(path_len)), counter)

    n_features, total = r.unpack("II")
    feats, doc_count = [], []
    for _ in range(n_features):
        origin, df = r.unpack("BI")
        feats.append(Feature(r.text(), ORIGIN_NAMES[origin]))
        doc_count.append(df)
    interner = interner_from_features(feats, doc_count, total)

    names = {}
    for _ in range(r.one("I")):
        h = r.one("Q")
        names[h] = r.text()

    examples = []
    for _ in range(r.one("I")):
        seq, tactic, n = r.unpack("QQI")
        counts = {}
        for _ in range(n):
            fid, count = r.unpack("II")
            counts[fid] = count
        examples.append(Example(FeatureVector.from_counts(counts), tactic, seq))

    if kind == "knn-exact":
        model: OnlineModel = KnnExactModel(params, ExampleDb(pvector(examples), interner))
    elif kind == "lshf":
        model = LshfModel(params, lshf.rebuild(params, seed, examples))
    else:
        trees = [_read_tree(r, examples) for _ in range(r.one("I"))]
        forest = RandomForest(
            trees=pvector(trees),
            n_max=params.n_max,
            impurity=params.impurity,
            rng=rng,
            max_leaf_examples=params.max_leaf_examples,
        )
        model = RForestModel(params, forest, size)

    if r.pos != len(data):
        raise SnapshotError("trailing bytes after snapshot")
    learner = OnlineLearner(model, features, interner, pmap(names))
    return learner, seed


def loads(data: bytes) -> Tuple[OnlineLearner, int]:
    """Decode a snapshot into (learner, seed)."""
    try:
        return _decode(data)
    except SnapshotError:
        raise
    except (KeyError, UnicodeDecodeError, ValueError) as err:
        raise SnapshotError(f"corrupt snapshot: {err}") from err


def save(learner: OnlineLearner, seed: int, path: Union[str, Path]) -> int:
    data = dumps(learner, seed)
    Path(path).write_bytes(data)
    logger.debug("wrote %d byte %s snapshot to %s", len(data), _kind_of(learner.model), path)
    return len(data)


def load(path: Union[str, Path]) -> Tuple[OnlineLearner, int]:
    try:
        data = Path(path).read_bytes()
    except OSError as err:
        raise SnapshotError(f"{path}: {err.strerror}") from err
    return loads(data)
