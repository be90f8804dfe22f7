"""Shared command-line handling for the experiment scripts."""
import argparse
import sys
from pathlib import Path

from monorearr.experiments import format_report, load_config, run_experiment, write_report

CONFIGS = Path(__file__).parent / "configs"


def run(description: str, default_config: str, default_out: str, argv=None) -> int:
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--config", default=str(CONFIGS / default_config))
    ap.add_argument("--out", default=default_out)
    ap.add_argument("--reps", type=int, help="override the number of replications")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)
    overrides = {"workers": args.workers}
    if args.reps is not None:
        overrides["reps"] = args.reps
    report = run_experiment(load_config(args.config, **overrides))
    out = write_report(report, args.out)
    sys.stdout.write(format_report(report))
    print(f"results written to {out}")
    return 0 if report.passed else 3
