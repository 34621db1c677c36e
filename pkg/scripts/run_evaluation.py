#!/usr/bin/env python
"""
Run both evaluation protocols for all three models from the terminal.
Just run: python scripts/run_evaluation.py [corpus.jsonl]

Without a corpus file the locality-structured synthetic corpus is used.
"""

import os
import sys
from dataclasses import replace

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Add parent dir to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.config import ALL_FEATURES, FEATURE_ABLATIONS, KNN_EXACT, LSHF_DEFAULT, RFOREST_TOP10, default_seed
from src.data_logger import EvalLogger
from src.evaluation import SplitSpec, chrono_eval, split_eval
from src.models import build_model
from src.synthetic import locality_corpus
from src.terms import load_corpus
from src.utils import MetricsDisplay

seed = default_seed()

print("\n" + "="*70)
print("STEP 1: Load Corpus")
print("="*70)

if len(sys.argv) > 1:
    records = load_corpus(sys.argv[1])
    print(f"✓ Loaded {len(records)} records from {sys.argv[1]}")
else:
    records = locality_corpus(seed=seed)
    print(f"⚠️  No corpus given, using {len(records)} synthetic locality records")

modules = sorted({r.module_path for r in records})
print(f"✓ {len(modules)} modules, {len({r.tactic for r in records})} distinct tactics")

print("\n" + "="*70)
print("STEP 2: Build Models")
print("="*70)

configs = [KNN_EXACT, LSHF_DEFAULT, RFOREST_TOP10]
models = []
for config in configs:
    config = replace(config, seed=seed)
    models.append(build_model(config))
    print(f"  - {config.model:10s} (seed {seed})")

print("\n" + "="*70)
print("STEP 3: Chronological Evaluation")
print("="*70)

chrono = chrono_eval(records, models, ALL_FEATURES, progress=True)
MetricsDisplay.print_report(chrono)
EvalLogger(protocol="chrono").log_report(chrono, config={"features": ALL_FEATURES.letters(), "seed": seed})

print("\n" + "="*70)
print("STEP 4: Split Evaluation")
print("="*70)

# Last module(s) are the held-out ones
held_out = modules[-max(1, len(modules) // 5):]
print(f"✓ Holding out: {', '.join(held_out)}")
split = split_eval(records, SplitSpec(test_modules=frozenset(held_out)), models, ALL_FEATURES, progress=True)
MetricsDisplay.print_report(split)
split_logger = EvalLogger(protocol="split")
split_logger.log_report(split, config={"features": ALL_FEATURES.letters(), "seed": seed, "held_out": held_out})

print("\n" + "="*70)
print("STEP 5: Feature Ablation (chronological, k-NN)")
print("="*70)

for name, features in FEATURE_ABLATIONS.items():
    report = chrono_eval(records, [build_model(KNN_EXACT)], features)
    s = report.models[KNN_EXACT.model]
    print(f"  {name:5s} top-1 {s.top1:6.1%}  top-10 {s.top10:6.1%}")

print("\n" + "="*70)
print("SUMMARY: chronological vs split top-10")
print("="*70)

for name in chrono.models:
    c, s = chrono.models[name], split.models[name]
    marker = "✓" if c.top10 >= s.top10 else "⚠️ "
    print(f"{marker} {name:10s} chrono {c.top10:6.1%}   split {s.top10:6.1%}")

print("\n" + "="*70)
print("✓ Evaluation Complete!")
print("="*70)
split_logger.print_summary()
