"""
Command-line entry point.

    python -m src.cli featurize   CORPUS [--output PATH]
    python -m src.cli train       CORPUS --snapshot PATH [--checkpoint-every N]
    python -m src.cli predict     --snapshot PATH  < state.json
    python -m src.cli eval-chrono CORPUS [--model M ...]
    python -m src.cli eval-split  CORPUS (--test-modules A,B | --test-frac F) [--model M ...]
    python -m src.cli export-xgb  CORPUS --ratio N --mode strong|random [--window W]
    python -m src.cli bench       [CORPUS] [--n 10000]
    python -m src.cli tune-rf     CORPUS (--test-modules A,B | --test-frac F)

Exit status: 0 on success, 1 on usage errors, 2 on data errors.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from pydantic import ValidationError

from src import snapshot
from src.config import (
    FeatureConfig,
    KnnParams,
    LshfParams,
    RForestParams,
    RunConfig,
    default_seed,
)
from src.data_logger import EvalLogger
from src.errors import TacticForestError
from src.evaluation import (
    DEFAULT_BUCKETS,
    EvalReport,
    OnlineLearner,
    SplitSpec,
    chrono_eval,
    export_binary_dataset,
    split_eval,
    tune_rforest,
    write_rows,
)
from src.features import FeatureInterner, featurize_state, tactic_hash, tactic_hex
from src.models import MODEL_KINDS, OnlineModel, build_model
from src.rng import Rng
from src.synthetic import clustered_corpus
from src.terms import load_corpus, parse_state
from src.utils import MetricsDisplay, run_bench

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """argparse reports usage errors with status 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _status(message: str) -> None:
    print(message, file=sys.stderr)


def _feature_letters(text: str) -> FeatureConfig:
    try:
        return FeatureConfig.from_letters(text)
    except (ValueError, ValidationError) as err:
        raise argparse.ArgumentTypeError(str(err)) from None


def _module_list(text: str) -> List[str]:
    return [m.strip() for m in text.split(",") if m.strip()]


def _run_config(args: argparse.Namespace, model: str) -> RunConfig:
    return RunConfig(
        model=model,
        features=args.features,
        lshf=LshfParams(
            n_tries=args.tries,
            max_depth=args.max_depth,
            resort=not args.no_resort,
            similarity=args.similarity,
        ),
        rforest=RForestParams(
            n_max=args.n_max,
            impurity=args.impurity,
            max_leaf_examples=args.max_leaf_examples,
        ),
        knn=KnnParams(similarity=args.similarity),
        k=args.k,
        seed=args.seed,
    )


def _models(args: argparse.Namespace) -> List[OnlineModel]:
    kinds = args.model if isinstance(args.model, list) else [args.model]
    return [build_model(_run_config(args, kind)) for kind in dict.fromkeys(kinds or ["lshf"])]


def _emit_report(report: EvalReport, args: argparse.Namespace) -> None:
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    if args.log_dir:
        eval_logger = EvalLogger(args.log_dir, protocol=report.protocol)
        eval_logger.log_report(report, config={"features": args.features.letters(), "seed": args.seed})
        _status(f"✓ Logged run to {eval_logger.run_dir}")
    if args.verbose:
        MetricsDisplay.print_per_module(report)


def _split_spec(args: argparse.Namespace, records) -> SplitSpec:
    if args.test_modules:
        return SplitSpec(test_modules=frozenset(args.test_modules), validation_fraction=args.validation_frac)
    return SplitSpec.from_test_fraction(records, args.test_frac, args.validation_frac)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _featurize_command(args: argparse.Namespace) -> int:
    records = load_corpus(args.corpus)
    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        interner = FeatureInterner()
        for record in records:
            fv, interner = featurize_state(record.state, args.features, interner)
            line = {
                "seq": record.seq,
                "features": {str(fid): count for fid, count in fv.counts},
                "tactic_hash": tactic_hex(tactic_hash(record.tactic)),
            }
            out.write(json.dumps(line) + "\n")
    finally:
        if args.output:
            out.close()
    _status(f"✓ Featurized {len(records)} records ({interner.next_id} distinct features)")
    return EXIT_OK


def _train_command(args: argparse.Namespace) -> int:
    config = _run_config(args, args.model)
    records = load_corpus(args.corpus)
    learner = OnlineLearner(build_model(config), config.features)
    for count, record in enumerate(records, 1):
        learner = learner.learn(record)
        if args.checkpoint_every and count % args.checkpoint_every == 0:
            path = f"{args.snapshot}.v{count}"
            snapshot.save(learner, config.seed, path)
            logger.info("checkpoint %s", path)
    size = snapshot.save(learner, config.seed, args.snapshot)
    _status(f"✓ Trained {config.model} on {len(records)} records, wrote {args.snapshot} ({size} bytes)")
    return EXIT_OK


def _predict_command(args: argparse.Namespace) -> int:
    learner, _ = snapshot.load(args.snapshot)
    state = parse_state(sys.stdin.read())
    for rank, h in enumerate(learner.predict(state, args.k), 1):
        print(f"{rank}\t{learner.tactic_name(h)}\t{tactic_hex(h)}")
    return EXIT_OK


def _eval_chrono_command(args: argparse.Namespace) -> int:
    records = load_corpus(args.corpus)
    report = chrono_eval(records, _models(args), args.features, progress=args.progress)
    _emit_report(report, args)
    return EXIT_OK


def _eval_split_command(args: argparse.Namespace) -> int:
    records = load_corpus(args.corpus)
    report = split_eval(records, _split_spec(args, records), _models(args), args.features, progress=args.progress)
    _emit_report(report, args)
    return EXIT_OK


def _export_command(args: argparse.Namespace) -> int:
    records = load_corpus(args.corpus)
    rows, report = export_binary_dataset(
        records,
        args.features,
        ratio=args.ratio,
        mode=args.mode,
        rng=Rng(args.seed),
        buckets=args.buckets,
        window=args.window,
        knn=KnnParams(similarity=args.similarity),
        progress=args.progress,
    )
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            write_rows(rows, f)
    else:
        write_rows(rows, sys.stdout)
    _status(f"✓ Exported {report.positives} positive and {report.negatives} negative rows")
    if report.insufficient:
        _status(f"⚠️  {report.insufficient} states had fewer than {args.ratio} negative candidates")
    return EXIT_OK


def _bench_command(args: argparse.Namespace) -> int:
    if args.corpus:
        records = load_corpus(args.corpus)
    else:
        records = clustered_corpus(n=args.n, n_clusters=50, seed=args.seed)
    results = []
    for model in _models(args):
        result = run_bench(model, args.features, records, n_queries=args.queries, progress=args.progress)
        results.append(result.to_dict())
        if args.verbose:
            MetricsDisplay.print_bench(result)
    print(json.dumps(results, indent=2, sort_keys=True))
    return EXIT_OK


def _tune_command(args: argparse.Namespace) -> int:
    records = load_corpus(args.corpus)
    table = tune_rforest(records, _split_spec(args, records), args.features, args.seed, progress=args.progress)
    print(table.to_csv(index=False, float_format="%.4f"), end="")
    best = table.sort_values(["top10", "top1"], ascending=False).iloc[0]
    _status(f"✓ Best top-10: n_max={int(best.n_max)} impurity={best.impurity} ({best.top10:.1%})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_common_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--features",
        type=_feature_letters,
        default=FeatureConfig(),
        help="Feature classes, any of O,W,V,T,S,C (default O)",
    )
    parser.add_argument("--seed", type=int, default=None, help="Random seed (default $TACTIC_FOREST_SEED or 42)")
    _add_output_args(parser)


def _add_output_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--verbose", action="store_true", help="Debug logging and detailed summaries")
    parser.add_argument("--progress", action="store_true", help="Show progress bars")


def _add_model_args(parser: argparse.ArgumentParser, multiple: bool = False) -> None:
    if multiple:
        parser.add_argument(
            "--model", choices=MODEL_KINDS, action="append", default=None,
            help="Model to evaluate; repeat for several (default lshf)",
        )
    else:
        parser.add_argument("--model", choices=MODEL_KINDS, default="lshf", help="Model kind")
    parser.add_argument("--tries", type=int, default=11, help="LSH forest: number of tries")
    parser.add_argument("--max-depth", type=int, default=20, help="LSH forest: maximum trie depth")
    parser.add_argument("--no-resort", action="store_true", help="LSH forest: keep bucket order")
    parser.add_argument("--similarity", choices=["plain", "tfidf"], default="tfidf", help="k-NN similarity")
    parser.add_argument("--n-max", type=int, default=320, help="Random forest: maximum number of trees")
    parser.add_argument("--impurity", type=float, default=0.5, help="Random forest: impurity threshold")
    parser.add_argument(
        "--max-leaf-examples", type=int, default=None, help="Random forest: soft cap on leaf size (off)"
    )
    parser.add_argument("-k", type=int, default=10, help="Number of predictions")


def _add_split_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--test-modules", type=_module_list, help="Comma separated held-out modules")
    group.add_argument("--test-frac", type=float, help="Hold out the last fraction of every module")
    parser.add_argument("--validation-frac", type=float, default=0.2, help="Validation share for tuning")


def _parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tactic-forest", description="Online tactic prediction: featurize, train, evaluate")
    subparsers = parser.add_subparsers(dest="command", required=True)

    p = subparsers.add_parser("featurize", help="Write the feature vector of every corpus record")
    p.add_argument("corpus", type=Path)
    p.add_argument("--output", type=Path, default=None, help="Output JSON lines (default stdout)")
    _add_common_args(p)
    p.set_defaults(func=_featurize_command)

    p = subparsers.add_parser("train", help="Stream a corpus into a model and write a snapshot")
    p.add_argument("corpus", type=Path)
    p.add_argument("--snapshot", type=Path, required=True, help="Snapshot file to write")
    p.add_argument("--checkpoint-every", type=int, default=0, help="Also write <snapshot>.v<count> every N records")
    _add_common_args(p)
    _add_model_args(p)
    p.set_defaults(func=_train_command)

    p = subparsers.add_parser("predict", help="Rank tactics for one proof state read from stdin")
    p.add_argument("--snapshot", type=Path, required=True, help="Snapshot file to load")
    p.add_argument("-k", type=int, default=10, help="Number of predictions")
    # features and seed come from the snapshot
    _add_output_args(p)
    p.set_defaults(func=_predict_command)

    for name, func, help_text in (
        ("eval-chrono", _eval_chrono_command, "Chronological evaluation"),
        ("eval-split", _eval_split_command, "Split evaluation on held-out modules"),
    ):
        p = subparsers.add_parser(name, help=help_text)
        p.add_argument("corpus", type=Path)
        p.add_argument("--log-dir", type=Path, default=None, help="Also write a run directory here")
        _add_common_args(p)
        _add_model_args(p, multiple=True)
        if name == "eval-split":
            _add_split_args(p)
        p.set_defaults(func=func)

    p = subparsers.add_parser("export-xgb", help="Export ranking rows for a binary classifier")
    p.add_argument("corpus", type=Path)
    p.add_argument("--ratio", type=int, default=4, help="Negative rows per positive row")
    p.add_argument("--mode", choices=["strong", "random"], default="strong", help="Negative sampling")
    p.add_argument("--buckets", type=int, default=DEFAULT_BUCKETS, help="Hash buckets per block")
    p.add_argument("--window", type=int, default=None, help="Only use the W preceding records for negatives")
    p.add_argument("--similarity", choices=["plain", "tfidf"], default="tfidf", help="k-NN similarity")
    p.add_argument("--output", type=Path, default=None, help="Output file (default stdout)")
    _add_common_args(p)
    p.set_defaults(func=_export_command)

    p = subparsers.add_parser("bench", help="Insert/query latency and peak memory")
    p.add_argument("corpus", type=Path, nargs="?", default=None, help="Corpus (default synthetic)")
    p.add_argument("--n", type=int, default=10000, help="Synthetic corpus size")
    p.add_argument("--queries", type=int, default=200, help="Number of timed queries")
    _add_common_args(p)
    _add_model_args(p, multiple=True)
    p.set_defaults(func=_bench_command)

    p = subparsers.add_parser("tune-rf", help="Grid search random forest hyperparameters")
    p.add_argument("corpus", type=Path)
    _add_common_args(p)
    _add_split_args(p)
    p.set_defaults(func=_tune_command)

    return parser


def _check_args(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    if hasattr(args, "seed") and args.seed is None:
        args.seed = default_seed()
    if getattr(args, "seed", 0) < 0:
        parser.error("--seed must be non-negative")
    if getattr(args, "test_frac", None) is not None and not 0 < args.test_frac < 1:
        parser.error("--test-frac must lie in (0, 1)")
    if getattr(args, "validation_frac", None) is not None and not 0 < args.validation_frac < 1:
        parser.error("--validation-frac must lie in (0, 1)")
    if getattr(args, "ratio", 1) < 1 or getattr(args, "buckets", 1) < 1:
        parser.error("--ratio and --buckets must be positive")
    if getattr(args, "window", None) is not None and args.window < 1:
        parser.error("--window must be positive")
    if getattr(args, "checkpoint_every", 0) < 0:
        parser.error("--checkpoint-every must be non-negative")
    if getattr(args, "k", 1) < 1:
        parser.error("-k must be positive")
    if hasattr(args, "tries"):
        kinds = args.model if isinstance(args.model, list) else [args.model]
        try:
            for kind in kinds or ["lshf"]:
                _run_config(args, kind)
        except ValidationError as err:
            first = err.errors()[0]
            parser.error(f"invalid hyperparameter {'.'.join(str(p) for p in first['loc'])}: {first['msg']}")


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse `argv`, run the subcommand and return the exit status."""
    parser = _parser()
    try:
        args = parser.parse_args(argv)
        _check_args(parser, args)
    except SystemExit as exit_:
        return int(exit_.code or 0)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ValidationError as err:
        first = err.errors()[0]
        where = ".".join(str(p) for p in first.get("loc", ()))
        print(f"error: {where}: {first['msg']}" if where else f"error: {first['msg']}", file=sys.stderr)
    except TacticForestError as err:
        print(f"error: {err}", file=sys.stderr)
    except OSError as err:
        name = err.filename or ""
        print(f"error: {name}: {err.strerror or err}", file=sys.stderr)
    return EXIT_DATA


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
