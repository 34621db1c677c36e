"""
Data logging utilities for evaluation runs.
Saves reports and per-case results to a timestamped run directory.
"""

import json
from datetime import datetime
from pathlib import Path
from typing import List, Optional

import pandas as pd

from src.data_types import CaseResult
from src.evaluation import EvalReport


class EvalLogger:
    """Logs evaluation results to organized CSV/JSON files."""

    def __init__(self, data_dir: str = "data", protocol: str = "chrono", timestamp: Optional[str] = None):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)

        # Create timestamp for this run
        self.timestamp = timestamp or datetime.now().strftime("%Y%m%d_%H%M%S")
        self.protocol = protocol
        self.run_dir = self.data_dir / f"run_{self.protocol}_{self.timestamp}"
        self.run_dir.mkdir(exist_ok=True)

        self.report_file = self.run_dir / "report.json"
        self.per_case_file = self.run_dir / "per_case.csv"
        self.model_summary_file = self.run_dir / "model_summary.csv"
        self.per_module_file = self.run_dir / "per_module.csv"

    def log_cases(self, cases: List[CaseResult]) -> pd.DataFrame:
        """One row per (case, model)."""
        df = pd.DataFrame(
            [
                {
                    "seq": c.seq,
                    "model": c.model,
                    "rank_of_truth": c.rank_of_truth,
                    "module": c.module,
                }
                for c in cases
            ],
            columns=["seq", "model", "rank_of_truth", "module"],
        )
        df.to_csv(self.per_case_file, index=False)
        return df

    def log_model_summary(self, report: EvalReport) -> pd.DataFrame:
        rows = [
            {"model": name, "top1": s.top1, "top10": s.top10, "n_cases": s.n_cases}
            for name, s in report.models.items()
        ]
        for pair, scores in report.union.items():
            rows.append({"model": pair, "top1": scores["union_top1"], "top10": scores["union_top10"]})
        df = pd.DataFrame(rows, columns=["model", "top1", "top10", "n_cases"])
        df.to_csv(self.model_summary_file, index=False, float_format="%.4f")
        return df

    def log_per_module(self, report: EvalReport) -> pd.DataFrame:
        rows = [
            {"module": module, "model": name, "top1": s.top1, "top10": s.top10, "n_cases": s.n_cases}
            for module, scores in report.per_module.items()
            for name, s in scores.items()
        ]
        df = pd.DataFrame(rows, columns=["module", "model", "top1", "top10", "n_cases"])
        df.to_csv(self.per_module_file, index=False, float_format="%.4f")
        return df

    def log_report(self, report: EvalReport, config: Optional[dict] = None) -> Path:
        """Write every file of the run."""
        payload = report.to_dict()
        payload["timestamp"] = self.timestamp
        if config is not None:
            payload["config"] = config
        with open(self.report_file, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
        self.log_cases(report.cases)
        self.log_model_summary(report)
        self.log_per_module(report)
        return self.run_dir

    def print_summary(self) -> None:
        """Print data logging summary."""
        print("\n" + "=" * 70)
        print("DATA LOGGING SUMMARY")
        print("=" * 70)
        print(f"✓ Results saved to: {self.run_dir}")
        print("\nFiles created:")
        print("  - report.json        (scores per model, module and model pair)")
        print("  - per_case.csv       (one row per case per model)")
        print("  - model_summary.csv  (top-1/top-10 per model)")
        print("  - per_module.csv     (top-1/top-10 per module)")
        print(f"\nTo analyze: pandas.read_csv('{self.per_case_file}')")
