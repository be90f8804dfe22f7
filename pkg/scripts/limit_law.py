"""Compare scaled errors at a single n with simulated draws of the limit variable.

    python3 scripts/limit_law.py --workers 4
"""
import sys

from _common import run

if __name__ == "__main__":
    sys.exit(run(__doc__.splitlines()[0], "limit_law.toml", "results/limit_law"))
