"""
Utilities for metrics display and benchmark statistics.
"""

import resource
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence

import numpy as np
from tqdm import tqdm

from src.config import FeatureConfig
from src.data_types import LabeledExampleRecord
from src.evaluation import EvalReport, OnlineLearner
from src.models import OnlineModel


def peak_memory_bytes() -> int:
    """Peak resident set size of this process."""
    peak = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    # macOS reports bytes, Linux kilobytes
    return peak if sys.platform == "darwin" else peak * 1024


def latency_summary(seconds: Sequence[float]) -> Dict[str, float]:
    """Mean and p50/p90/p99 in milliseconds."""
    if not len(seconds):
        return {"mean_ms": 0.0, "p50_ms": 0.0, "p90_ms": 0.0, "p99_ms": 0.0}
    ms = np.asarray(seconds, dtype=float) * 1000.0
    p50, p90, p99 = np.percentile(ms, [50, 90, 99])
    return {"mean_ms": float(ms.mean()), "p50_ms": float(p50), "p90_ms": float(p90), "p99_ms": float(p99)}


@dataclass
class BenchResult:
    model: str
    n_examples: int
    insert_seconds: List[float] = field(default_factory=list)
    query_seconds: List[float] = field(default_factory=list)
    peak_memory: int = 0

    def amortized_ratio(self, window: int = 1000) -> float:
        """Mean insert time of the last `window` inserts over the first `window`."""
        t = self.insert_seconds
        if len(t) < 2 * window:
            window = max(1, len(t) // 2)
        first = float(np.mean(t[:window]))
        last = float(np.mean(t[-window:]))
        return last / first if first > 0 else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model": self.model,
            "n_examples": self.n_examples,
            "insert": latency_summary(self.insert_seconds),
            "query": latency_summary(self.query_seconds),
            "amortized_insert_ratio": self.amortized_ratio(),
            "peak_memory_mb": self.peak_memory / 2**20,
        }


class Stopwatch:
    """`with Stopwatch(times): ...` appends the elapsed seconds to `times`."""

    def __init__(self, sink: List[float]):
        self.sink = sink

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.sink.append(time.perf_counter() - self.start)
        return False


def run_bench(
    model: OnlineModel,
    features: FeatureConfig,
    records: Sequence[LabeledExampleRecord],
    n_queries: int = 200,
    progress: bool = False,
) -> BenchResult:
    """Time every insert, then `n_queries` predictions against the full model."""
    learner = OnlineLearner(model, features)
    result = BenchResult(model.name, len(records))
    for record in tqdm(records, desc=f"Inserting ({model.name})", disable=not progress):
        with Stopwatch(result.insert_seconds):
            learner = learner.learn(record)
    for record in records[-n_queries:]:
        with Stopwatch(result.query_seconds):
            learner.predict(record.state)
    result.peak_memory = peak_memory_bytes()
    return result


class MetricsDisplay:
    """Pretty-print metrics."""

    @staticmethod
    def print_report(report: EvalReport) -> None:
        """Print evaluation summary."""
        print("\n" + "=" * 60)
        print(f"{report.protocol.upper()} EVALUATION")
        print("=" * 60)
        print(f"{'model':<22}{'top-1':>10}{'top-10':>10}{'cases':>10}")
        for name, s in report.models.items():
            print(f"{name:<22}{s.top1:>10.1%}{s.top10:>10.1%}{s.n_cases:>10}")
        if report.union:
            print("\nUnion (solved by either model)")
            for pair, scores in report.union.items():
                print(f"  {pair:<30} top-1 {scores['union_top1']:.1%}  top-10 {scores['union_top10']:.1%}")
        print("=" * 60 + "\n")

    @staticmethod
    def print_per_module(report: EvalReport, limit: int = 20) -> None:
        """Print per-module statistics."""
        print("\n" + "=" * 60)
        print("PER-MODULE STATISTICS")
        print("=" * 60)
        for module, scores in list(report.per_module.items())[:limit]:
            print(f"\n{module or '<no module>'}")
            for name, s in scores.items():
                print(f"  {name:<20} top-1 {s.top1:.1%}  top-10 {s.top10:.1%}  ({s.n_cases} cases)")
        print("=" * 60 + "\n")

    @staticmethod
    def print_bench(result: BenchResult) -> None:
        d = result.to_dict()
        print("\n" + "=" * 60)
        print(f"BENCHMARK: {result.model} ({result.n_examples} examples)")
        print("=" * 60)
        for phase in ("insert", "query"):
            s = d[phase]
            print(f"{phase:<8} mean {s['mean_ms']:.3f} ms  p50 {s['p50_ms']:.3f}  p90 {s['p90_ms']:.3f}  p99 {s['p99_ms']:.3f}")
        print(f"Amortized insert ratio (last/first 1k): {d['amortized_insert_ratio']:.2f}")
        print(f"Peak memory: {d['peak_memory_mb']:.1f} MB")
        print("=" * 60 + "\n")
