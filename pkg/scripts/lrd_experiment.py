"""Rate study under long-range dependent (fractional Gaussian) noise.

    python3 scripts/lrd_experiment.py
"""
import sys

from _common import run

if __name__ == "__main__":
    sys.exit(run(__doc__.splitlines()[0], "regression_lrd.toml", "results/lrd"))
