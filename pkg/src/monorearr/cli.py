"""Command-line entry point: ``monorearr <subcommand> ...``.

Exit codes: 0 success, 2 invalid input (bad configuration, failed
precondition), 3 an experiment ran but one of its gates failed.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys

from .dependence import DependenceModel, generate
from .errors import ConfigError, DomainError, PreconditionError, ShapeError
from .experiments import load_config, run_experiment, write_report
from .grid import Interval, from_csv, to_csv
from .kernels import get_kernel
from .limitsim import LimitParams, limit_draws
from .rearrange import TruncationWindow, rearrange_density, rearrange_finite, rearrange_local

log = logging.getLogger("monorearr")

EXIT_INPUT = 2
EXIT_GATE = 3


def _parse_window(text: str) -> TruncationWindow:
    try:
        lo0, hi0, lo1, hi1, M = (float(x) for x in text.split(","))
    except ValueError:
        raise DomainError(f"--window needs five comma-separated numbers, got {text!r}") from None
    return TruncationWindow(Interval(lo0, hi0), Interval(lo1, hi1), M)


def cmd_rearrange(args) -> int:
    f = from_csv(args.input)
    if args.density:
        out = rearrange_density(f)
    elif args.window:
        out = rearrange_local(f, _parse_window(args.window))
    else:
        out = rearrange_finite(f)
    to_csv(out, args.output)
    return 0


def cmd_simulate_limit(args) -> int:
    p = LimitParams(A=args.A, Delta=args.Delta, c=args.c, process=args.process, beta=args.beta)
    draws, dropped = limit_draws(p, get_kernel(args.kernel), args.draws, args.seed)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["draw"])
        w.writerows([[f"{x:.17g}"] for x in draws])
    if dropped:
        log.warning("%d of %d draws dropped", dropped, args.draws)
    return 0 if dropped <= 0.01 * args.draws else EXIT_GATE


def cmd_generate(args) -> int:
    if args.regime == "iid":
        model = DependenceModel("iid", sigma=args.sigma)
    elif args.regime == "ar1":
        model = DependenceModel("ar1", rho=args.rho, sigma_e=args.sigma)
    else:
        model = DependenceModel("lrd", d=args.d, r=args.r)
    eps = generate(model, args.n, args.seed)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "value"])
        w.writerows([[i + 1, f"{x:.17g}"] for i, x in enumerate(eps)])
    return 0


def cmd_experiment(args) -> int:
    overrides = {"problem": args.problem, "workers": args.workers, "kernel": args.kernel,
                 "a": args.bandwidth_a, "regime": args.regime}
    cfg = load_config(args.config, **overrides)
    report = run_experiment(cfg)
    write_report(report, args.out)
    for name, (ok, detail) in report.gates.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return 0 if report.passed else EXIT_GATE


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="monorearr", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rearrange", help="decreasing rearrangement of a t,value CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--density", action="store_true",
                   help="rearrange a nonnegative function on the half line")
    p.add_argument("--window", help="lo0,hi0,lo1,hi1,M: local rearrangement with barrier checks "
                                    "(write --window=-1,1,-3,3,2 when lo0 is negative)")
    p.set_defaults(func=cmd_rearrange)

    p = sub.add_parser("simulate-limit", help="draws of the rearranged limit variable")
    p.add_argument("--A", type=float, required=True)
    p.add_argument("--Delta", type=float, default=0.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--process", choices=["brownian", "fbm"], default="brownian")
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--kernel", default="epanechnikov")
    p.add_argument("--draws", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate_limit)

    p = sub.add_parser("generate", help="simulate an error sequence")
    p.add_argument("--regime", choices=["iid", "ar1", "lrd"], default="iid")
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--sigma", type=float, default=1.0,
                   help="noise sd (iid) or innovation sd (ar1)")
    p.add_argument("--d", type=float, default=0.4)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("experiment", help="Monte Carlo study from a TOML config")
    p.add_argument("problem", choices=["regression", "density"])
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--kernel")
    p.add_argument("--bandwidth-a", type=float)
    p.add_argument("--regime", choices=["iid", "ar1", "lrd"])
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DomainError, PreconditionError, ShapeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
