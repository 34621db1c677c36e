#!/usr/bin/env python
"""
COMPARATIVE ANALYSIS: Compare the latest evaluation runs.

This script loads the most recent chronological and split run directories
written by EvalLogger and compares models across the two protocols.

Usage:
    python scripts/analyze_runs.py [data_dir]

Output:
    - Console summary table comparing protocols
    - Rank-of-truth distribution and per-module breakdown
"""

import sys
from pathlib import Path
from typing import Dict, Optional

import pandas as pd


def find_latest_runs(data_dir: str = "data", protocols: list = None) -> Dict[str, Path]:
    """Find latest run directories for each protocol."""
    if protocols is None:
        protocols = ['chrono', 'split']

    data_path = Path(data_dir)
    runs = {}

    for protocol in protocols:
        matches = sorted(data_path.glob(f"run_{protocol}_*"), reverse=True)
        if matches:
            runs[protocol] = matches[0]
            print(f"✓ Found {protocol}: {matches[0].name}")
        else:
            print(f"⚠️  No runs found for {protocol}")

    return runs


def load_run_data(run_dir: Path) -> Dict[str, Optional[pd.DataFrame]]:
    """Load all CSV files from a run directory."""
    data = {'per_case': None, 'model_summary': None, 'per_module': None}

    try:
        data['per_case'] = pd.read_csv(run_dir / 'per_case.csv')
        data['model_summary'] = pd.read_csv(run_dir / 'model_summary.csv')
        data['per_module'] = pd.read_csv(run_dir / 'per_module.csv')
    except FileNotFoundError as e:
        print(f"⚠️  Missing file in {run_dir}: {e}")

    return data


def rank_distribution(per_case: pd.DataFrame) -> pd.DataFrame:
    """Share of cases per rank bucket (1, 2-5, 6-10, miss) for every model."""
    buckets = pd.cut(
        per_case['rank_of_truth'].replace(0, 11),
        bins=[0, 1, 5, 10, 11],
        labels=['1', '2-5', '6-10', 'miss'],
    )
    table = pd.crosstab(per_case['model'], buckets, normalize='index')
    return table.round(3)


def compare_protocols(all_data: Dict[str, dict]) -> pd.DataFrame:
    frames = []
    for protocol, data in all_data.items():
        summary = data['model_summary']
        if summary is None:
            continue
        summary = summary[~summary['model'].str.contains(r'\|', regex=True)].copy()
        summary['protocol'] = protocol
        frames.append(summary)
    if not frames:
        return pd.DataFrame()
    combined = pd.concat(frames, ignore_index=True)
    return combined.pivot(index='model', columns='protocol', values=['top1', 'top10'])


def main():
    print("\n" + "="*70)
    print("EVALUATION RUN COMPARISON")
    print("="*70)

    data_dir = sys.argv[1] if len(sys.argv) > 1 else "data"

    print("\n1. Locating latest runs...")
    runs = find_latest_runs(data_dir)
    if not runs:
        print(f"\n⚠️  No runs found in {data_dir}/")
        print("Run: python scripts/run_evaluation.py")
        sys.exit(1)

    print("\n2. Loading data...")
    all_data = {protocol: load_run_data(run_dir) for protocol, run_dir in runs.items()}

    print("\n" + "="*70)
    print("SUMMARY COMPARISON")
    print("="*70 + "\n")
    comparison = compare_protocols(all_data)
    if not comparison.empty:
        print(comparison.to_string())

    print("\n" + "="*70)
    print("RANK OF TRUE TACTIC")
    print("="*70)
    for protocol, data in all_data.items():
        if data['per_case'] is not None and not data['per_case'].empty:
            print(f"\n{protocol}:")
            print(rank_distribution(data['per_case']).to_string())

    print("\n" + "="*70)
    print("HARDEST MODULES (lowest top-10)")
    print("="*70)
    for protocol, data in all_data.items():
        per_module = data['per_module']
        if per_module is not None and not per_module.empty:
            print(f"\n{protocol}:")
            print(per_module.sort_values('top10').head(5).to_string(index=False))

    print("\n" + "="*70)
    print("KEY INSIGHTS")
    print("="*70 + "\n")
    if not comparison.empty and 'chrono' in runs and 'split' in runs:
        for model in comparison.index:
            chrono_top10 = comparison.loc[model, ('top10', 'chrono')]
            split_top10 = comparison.loc[model, ('top10', 'split')]
            if pd.isna(chrono_top10) or pd.isna(split_top10):
                continue
            print(f"✓ {model}: chronological top-10 {chrono_top10:.1%} vs split {split_top10:.1%}")


if __name__ == '__main__':
    main()
