"""Monte Carlo harness for the rearranged kernel estimators.

Each replication is a pure function of ``(config, n, rep)``: its random
stream is ``replication_seed(master_seed, n, rep)``.  Results are sorted by
``(n, rep)`` before aggregation, so reports do not depend on how many worker
processes ran them.
"""
from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.stats import norm

from .dependence import DependenceModel, generate, hermite_coeff, long_run_variance, replication_seed
from .errors import ConfigError, DomainError
from .grid import CELLS_PER_UNIT, GridFunction, Interval, distance, evaluate, sample
from .kernels import BandwidthRule, bandwidth, gasser_muller, get_kernel, kde
from .limitsim import LimitParams, limit_draws
from .rearrange import density_mass, rearrange_density, rearrange_finite

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

NORMS = ("sup", "L1", "L2")


# -- target functions ---------------------------------------------------------------

@dataclass(frozen=True)
class Truth:
    name: str
    f: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    cdf: Callable | None = None
    # maps standard normal variates to draws with this marginal
    from_normal: Callable | None = None
    default_t0: float = 0.5


REGRESSION_TRUTHS = {
    "linear": Truth("linear", lambda t: 2.0 * (1.0 - np.asarray(t)),
                    lambda t: np.full_like(np.asarray(t, dtype=float), -2.0)),
    "exponential": Truth("exponential", lambda t: np.exp(-np.asarray(t)),
                         lambda t: -np.exp(-np.asarray(t))),
}

_Q40_EXP = -math.log(0.6)
_Q40_HALFNORM = float(norm.ppf(0.7))

DENSITY_TRUTHS = {
    "exponential": Truth(
        "exponential",
        f=lambda t: np.where(np.asarray(t) >= 0, np.exp(-np.abs(t)), 0.0),
        deriv=lambda t: -np.exp(-np.asarray(t)),
        cdf=lambda t: np.where(np.asarray(t) >= 0, -np.expm1(-np.maximum(t, 0.0)), 0.0),
        from_normal=lambda z: -norm.logcdf(-z),
        default_t0=_Q40_EXP),
    "halfnormal": Truth(
        "halfnormal",
        f=lambda t: np.where(np.asarray(t) >= 0, 2 * norm.pdf(t), 0.0),
        deriv=lambda t: -2 * np.asarray(t) * norm.pdf(t),
        cdf=lambda t: np.where(np.asarray(t) >= 0, 2 * norm.cdf(t) - 1, 0.0),
        from_normal=lambda z: norm.ppf(0.5 + 0.5 * norm.cdf(z)),
        default_t0=_Q40_HALFNORM),
}


# -- configuration ------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    problem: str = "regression"
    truth: str = ""
    t0: float | None = None
    kernel: str = "epanechnikov"
    regime: str = "iid"
    sigma: float = 1.0
    rho: float = 0.5
    sigma_e: float = 1.0
    d: float = 0.4
    r: int = 1
    a: float = 1.0
    n_list: list = field(default_factory=lambda: [500, 1000, 2000, 4000, 8000, 16000])
    reps: int = 200
    master_seed: int = 20080101
    cells_per_unit: int = CELLS_PER_UNIT
    limit_draws: int = 2000
    limit_n: int | None = None
    ks_max: float | None = None
    slope_tol: float | None = None
    workers: int = 1

    def __post_init__(self):
        if self.problem not in ("regression", "density"):
            raise ConfigError(f"problem must be regression or density, got {self.problem!r}")
        truths = REGRESSION_TRUTHS if self.problem == "regression" else DENSITY_TRUTHS
        if not self.truth:
            self.truth = "linear" if self.problem == "regression" else "exponential"
        if self.truth not in truths:
            raise ConfigError(f"unknown {self.problem} truth {self.truth!r}; "
                              f"choose from {sorted(truths)}")
        if self.t0 is None:
            self.t0 = truths[self.truth].default_t0
        if self.problem == "regression" and not 0 < self.t0 < 1:
            raise ConfigError(f"t0 must be interior to (0, 1), got {self.t0}")
        if self.problem == "density" and not self.t0 > 0:
            raise ConfigError(f"t0 must be positive, got {self.t0}")
        if self.problem == "density" and self.regime == "lrd":
            raise ConfigError("density estimation under long-range dependence is not supported: "
                              "the limit theory covers independent and mixing samples only")
        get_kernel(self.kernel)
        self.n_list = sorted(int(n) for n in self.n_list)
        if not self.n_list or self.n_list[0] < 2:
            raise ConfigError("n_list must hold sample sizes >= 2")
        if self.reps < 2:
            raise ConfigError(f"reps must be at least 2, got {self.reps}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        try:
            self.model
            self.rule
        except (DomainError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.truth_fn.deriv(np.array([self.t0]))[0] >= 0:
            raise ConfigError("truth must be strictly decreasing at t0")

    @property
    def model(self) -> DependenceModel:
        if self.regime == "iid":
            return DependenceModel("iid", sigma=self.sigma)
        if self.regime == "ar1":
            return DependenceModel("ar1", rho=self.rho, sigma_e=self.sigma_e)
        return DependenceModel("lrd", d=self.d, r=self.r)

    @property
    def rule(self) -> BandwidthRule:
        if self.regime == "lrd":
            H = 1 - self.d / 2
            # fGn covariances behave like H(2H-1) k^{-d}
            return BandwidthRule("lrd", self.a, d=self.d, r=self.r, l0=H * (2 * H - 1))
        return BandwidthRule("iid" if self.regime == "iid" else "mixing", self.a)

    @property
    def truth_fn(self) -> Truth:
        return (REGRESSION_TRUTHS if self.problem == "regression" else DENSITY_TRUTHS)[self.truth]

    @property
    def expected_slope(self) -> float:
        return self.rule.exponent

    @property
    def gate_slope_tol(self) -> float:
        if self.slope_tol is not None:
            return self.slope_tol
        return 0.15 if self.regime == "lrd" else 0.10


def load_config(path, **overrides) -> ExperimentConfig:
    """Read a flat TOML file of :class:`ExperimentConfig` fields."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    raw.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


# -- statistics ------------------------------------------------------------------------

def ks_distance(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic ``sup |F_a - F_b|``."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise DomainError("KS distance needs two nonempty samples")
    pts = np.concatenate([a, b])
    Fa = np.searchsorted(a, pts, side="right") / a.size
    Fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.abs(Fa - Fb).max())


def rate_fit(points) -> float:
    """Least-squares slope of ``log rmse`` against ``log n``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise DomainError("rate fit needs at least three (n, rmse) pairs")
    if np.any(pts <= 0):
        raise DomainError("rate fit needs positive n and rmse")
    x, y = np.log(pts[:, 0]), np.log(pts[:, 1])
    x = x - x.mean()
    return float(np.dot(x, y - y.mean()) / np.dot(x, x))


def _norm_errors(est: np.ndarray, target: np.ndarray, weight: float) -> dict:
    diff = np.abs(est - target)
    return {"sup": float(diff.max()), "L1": float(weight * diff.sum()),
            "L2": float(math.sqrt(weight * np.dot(diff, diff)))}


# -- replications ------------------------------------------------------------------------

def regression_replicate(cfg: ExperimentConfig, n: int, rep: int) -> dict:
    seed = replication_seed(cfg.master_seed, n, rep)
    truth = cfg.truth_fn
    eps = generate(cfg.model, n, seed)
    t = np.arange(1, n + 1) / n
    y = truth.f(t) + eps
    h = bandwidth(cfg.rule, n)
    unit = Interval(0.0, 1.0)
    m = cfg.cells_per_unit + 1
    x_n = gasser_muller(y, get_kernel(cfg.kernel), h, unit, m)
    x_hat = rearrange_finite(x_n)
    raw = evaluate(x_hat, cfg.t0) - float(truth.f(cfg.t0))
    target = sample(truth.f, unit, m)
    pre = {nm: distance(x_n, target, nm) for nm in NORMS}
    post = {nm: distance(x_hat, target, nm) for nm in NORMS}
    return _row(n, rep, seed, h, raw, raw / h, pre, post, mass=float("nan"))


def density_grid(sample_max: float, h: float, cells_per_unit: int) -> tuple[Interval, int]:
    """Grid with nodes at multiples of the step, covering ``[-h, sample_max + h]``."""
    step = 1.0 / cells_per_unit
    k_lo = math.ceil(h / step)
    k_hi = math.ceil((sample_max + h) / step)
    return Interval(-k_lo * step, k_hi * step), k_lo + k_hi + 1


def density_sample(cfg: ExperimentConfig, n: int, seed: int) -> np.ndarray:
    """Stationary sample with the configured marginal.

    The mixing case maps a unit-variance Gaussian AR(1) chain through the
    normal CDF and the marginal quantile function.
    """
    if cfg.regime == "ar1":
        z = generate(DependenceModel("ar1", rho=cfg.rho,
                                     sigma_e=math.sqrt(1 - cfg.rho ** 2)), n, seed)
    else:
        z = np.random.default_rng(seed).standard_normal(n)
    return cfg.truth_fn.from_normal(z)


def density_replicate(cfg: ExperimentConfig, n: int, rep: int) -> dict:
    seed = replication_seed(cfg.master_seed, n, rep)
    truth = cfg.truth_fn
    s = density_sample(cfg, n, seed)
    h = bandwidth(cfg.rule, n)
    grid, m = density_grid(float(s.max()), h, cfg.cells_per_unit)
    x_n = kde(s, get_kernel(cfg.kernel), h, grid, m)
    f_hat = rearrange_density(x_n, tail_mass_bound=1e-6)
    raw = evaluate(f_hat, cfg.t0) - float(truth.f(cfg.t0))
    # the truth on the input grid (zero on the negative axis) and its rearrangement,
    # which is the truth itself on the output grid
    target_in = truth.f(x_n.nodes)
    target_out = np.sort(target_in)[::-1]
    pre = _norm_errors(x_n.values, target_in, x_n.step)
    post = _norm_errors(f_hat.values, target_out, f_hat.step)
    return _row(n, rep, seed, h, raw, n ** (1 / 3) * raw, pre, post, mass=density_mass(f_hat))


def _row(n, rep, seed, dn, raw, scaled, pre, post, mass) -> dict:
    row = {"n": n, "rep": rep, "seed": seed, "dn": dn,
           "raw_error": raw, "scaled_error": scaled, "mass": mass}
    for nm in NORMS:
        row[f"{nm}_raw"] = pre[nm]
        row[f"{nm}_rearranged"] = post[nm]
    return row


def _run_task(args):
    cfg, n, rep = args
    fn = regression_replicate if cfg.problem == "regression" else density_replicate
    return fn(cfg, n, rep)


# -- limit law ----------------------------------------------------------------------------

def limit_params(cfg: ExperimentConfig) -> tuple[LimitParams, float] | None:
    """Parameters of the limit variable and the factor multiplying it.

    Returns ``None`` when no limit draw is available (Hermite rank >= 2).
    """
    k = get_kernel(cfg.kernel)
    A = float(cfg.truth_fn.deriv(np.array([cfg.t0]))[0])
    Delta = A * k.moments[1]
    if cfg.problem == "density":
        f0 = float(cfg.truth_fn.f(cfg.t0))
        return LimitParams(A=A, Delta=Delta, c=cfg.a ** -1.5 * math.sqrt(f0)), cfg.a
    if cfg.regime == "iid":
        return LimitParams(A=A, Delta=Delta, c=cfg.sigma * cfg.a ** -1.5), 1.0
    if cfg.regime == "ar1":
        kappa = math.sqrt(long_run_variance(cfg.model))
        return LimitParams(A=A, Delta=Delta, c=kappa * cfg.a ** -1.5), 1.0
    if cfg.r != 1:
        return None
    eta = abs(hermite_coeff(cfg.model.g, cfg.r))
    return LimitParams(A=A, Delta=Delta, c=eta * cfg.a, process="fbm",
                       beta=cfg.model.beta), 1.0


# -- report ----------------------------------------------------------------------------------

@dataclass
class Report:
    config: ExperimentConfig
    rows: list
    summary: list
    slope: float | None
    limit_draws: np.ndarray
    dropped_draws: int
    ks: float | None
    gates: dict
    runtime: float

    @property
    def passed(self) -> bool:
        return all(ok for ok, _ in self.gates.values())


def _summarise(rows: list, n_list: list) -> list:
    out = []
    for n in n_list:
        e = np.array([r["raw_error"] for r in rows if r["n"] == n])
        out.append({"n": n, "rmse": float(np.sqrt(np.mean(e ** 2))),
                    "mean": float(e.mean()), "sd": float(e.std(ddof=1))})
    return out


def run_experiment(cfg: ExperimentConfig) -> Report:
    start = time.perf_counter()
    tasks = [(cfg, n, rep) for n in cfg.n_list for rep in range(cfg.reps)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            rows = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (8 * cfg.workers))))
    else:
        rows = [_run_task(t) for t in tasks]
    rows.sort(key=lambda r: (r["n"], r["rep"]))
    summary = _summarise(rows, cfg.n_list)
    slope = None
    if len(summary) >= 3 and all(s["rmse"] > 0 for s in summary):
        slope = rate_fit([(s["n"], s["rmse"]) for s in summary])

    lp = limit_params(cfg)
    draws, dropped, ks = np.array([]), 0, None
    if lp is not None and cfg.limit_draws > 0:
        params, factor = lp
        draws, dropped = limit_draws(params, get_kernel(cfg.kernel), cfg.limit_draws,
                                     replication_seed(cfg.master_seed, 0, 2 ** 31))
        draws = factor * draws
        n_lim = cfg.limit_n or cfg.n_list[-1]
        scaled = [r["scaled_error"] for r in rows if r["n"] == n_lim]
        if scaled and draws.size:
            ks = ks_distance(scaled, draws)

    gates = {}
    worst = 0.0
    for r in rows:
        for nm in NORMS:
            scale = max(1.0, r[f"{nm}_raw"])
            worst = max(worst, (r[f"{nm}_rearranged"] - r[f"{nm}_raw"]) / scale)
    gates["monotone_never_worse"] = (worst <= 1e-10, f"max excess {worst:.3g}")
    if slope is not None:
        dev = abs(slope - cfg.expected_slope)
        gates["rate_slope"] = (dev <= cfg.gate_slope_tol,
                               f"slope {slope:.4f} vs {cfg.expected_slope:.4f} "
                               f"(tol {cfg.gate_slope_tol})")
    if cfg.limit_draws > 0 and lp is not None:
        frac = dropped / cfg.limit_draws
        gates["limit_draw_drops"] = (frac <= 0.01, f"{dropped} of {cfg.limit_draws} dropped")
    if cfg.problem == "density":
        mass_err = max(abs(r["mass"] - 1.0) for r in rows)
        gates["density_mass"] = (mass_err <= 1e-6, f"max |mass - 1| = {mass_err:.3g}")
    if cfg.ks_max is not None and ks is not None:
        gates["limit_ks"] = (ks <= cfg.ks_max, f"KS {ks:.4f} (max {cfg.ks_max})")

    return Report(cfg, rows, summary, slope, draws, dropped, ks, gates,
                  time.perf_counter() - start)


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_report(report: Report, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "errors.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "rep", "seed", "dn", "raw_error", "scaled_error"])
        for r in report.rows:
            w.writerow([_fmt(r[c]) for c in ("n", "rep", "seed", "dn", "raw_error", "scaled_error")])
    with open(out / "norms.csv", "w", newline="") as fh:
        cols = ["n", "rep"] + [f"{nm}_{s}" for nm in NORMS for s in ("raw", "rearranged")]
        if report.config.problem == "density":
            cols.append("mass")
        w = csv.writer(fh)
        w.writerow(cols)
        for r in report.rows:
            w.writerow([_fmt(r[c]) for c in cols])
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "rmse", "mean", "sd"])
        for s in report.summary:
            w.writerow([_fmt(s[c]) for c in ("n", "rmse", "mean", "sd")])
    with open(out / "limit_draws.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["draw"])
        for x in report.limit_draws:
            w.writerow([_fmt(x)])
    (out / "report.txt").write_text(format_report(report))
    return out


def format_report(report: Report) -> str:
    cfg = report.config
    lines = [f"problem: {cfg.problem}  truth: {cfg.truth}  t0: {cfg.t0:.6g}  "
             f"regime: {cfg.regime}  kernel: {cfg.kernel}  a: {cfg.a}",
             f"n_list: {cfg.n_list}  reps: {cfg.reps}  master_seed: {cfg.master_seed}", ""]
    lines.append(f"{'n':>8} {'rmse':>12} {'mean':>12} {'sd':>12}")
    for s in report.summary:
        lines.append(f"{s['n']:>8d} {s['rmse']:>12.5g} {s['mean']:>12.5g} {s['sd']:>12.5g}")
    lines.append("")
    if report.slope is not None:
        lines.append(f"rate slope: {report.slope:.4f} (expected {cfg.expected_slope:.4f})")
    if report.ks is not None:
        lines.append(f"KS(scaled errors, limit draws): {report.ks:.4f} "
                     f"[{report.limit_draws.size} draws, {report.dropped_draws} dropped]")
    else:
        lines.append("KS: not available for this configuration")
    lines.append("")
    for name, (ok, detail) in report.gates.items():
        lines.append(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    lines.append(f"runtime: {report.runtime:.1f} s")
    return "\n".join(lines) + "\n"


def run_regression(cfg: ExperimentConfig) -> Report:
    if cfg.problem != "regression":
        raise ConfigError("run_regression needs problem = regression")
    return run_experiment(cfg)


def run_density(cfg: ExperimentConfig) -> Report:
    if cfg.problem != "density":
        raise ConfigError("run_density needs problem = density")
    return run_experiment(cfg)


def config_dict(cfg: ExperimentConfig) -> dict:
    return asdict(cfg)
