"""Convergence-rate study: fit log RMSE against log n for the rearranged estimator.

    python3 scripts/rate_study.py                       # iid regression
    python3 scripts/rate_study.py --config scripts/configs/regression_ar1.toml
    python3 scripts/rate_study.py --config scripts/configs/density_iid.toml
"""
import sys

from _common import run

if __name__ == "__main__":
    sys.exit(run(__doc__.splitlines()[0], "regression_iid.toml", "results/rate_study"))
