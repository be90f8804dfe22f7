"""Functions sampled on uniform grids over finite intervals.

A :class:`GridFunction` stores node values ``f(lo + j * step)`` for
``j = 0, ..., m - 1``.  Two readings of the samples are used:

* piecewise-linear interpolation, for pointwise evaluation;
* the *cell measure*, in which the interval is cut into ``m`` cells of
  equal width ``(hi - lo) / m`` and node ``j`` owns cell ``j``.  Level-set
  measures and the L^p norms use this reading, which is what makes the
  decreasing rearrangement an exact descending sort of the node values.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import DomainError, ShapeError

#: Default number of grid cells per unit length.
CELLS_PER_UNIT = 2048

NORMS = ("sup", "L1", "L2")


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise DomainError(f"interval endpoints must be finite, got [{self.lo}, {self.hi}]")
        if not self.lo < self.hi:
            raise DomainError(f"need lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, t: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= t <= self.hi + tol

    def contains_interval(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def scaled(self, c: float) -> "Interval":
        """The interval ``I / c`` for ``c > 0``."""
        return Interval(self.lo / c, self.hi / c)

    def shifted(self, c: float) -> "Interval":
        """The interval ``I - c``."""
        return Interval(self.lo - c, self.hi - c)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real function sampled at ``m >= 2`` equally spaced nodes of ``interval``.

    ``flags`` carries diagnostic markers attached by producers (for instance
    a truncation warning from density rearrangement); it does not take part
    in any numerical operation.
    """

    interval: Interval
    values: np.ndarray
    flags: tuple[str, ...] = field(default=())

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ShapeError(f"need a 1-d array of at least 2 values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("grid function values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return self.values.size

    @property
    def step(self) -> float:
        return self.interval.length / (self.m - 1)

    @property
    def cell(self) -> float:
        """Width of the measure cell owned by each node."""
        return self.interval.length / self.m

    @property
    def nodes(self) -> np.ndarray:
        return _nodes(self.interval, self.m)

    def with_values(self, values, flags: tuple[str, ...] | None = None) -> "GridFunction":
        return GridFunction(self.interval, values, self.flags if flags is None else flags)

    def __call__(self, t):
        return evaluate(self, t)

    def __repr__(self):
        return (f"GridFunction([{self.interval.lo:g}, {self.interval.hi:g}], m={self.m}"
                + (f", flags={self.flags}" if self.flags else "") + ")")


def _nodes(interval: Interval, m: int) -> np.ndarray:
    t = interval.lo + interval.length / (m - 1) * np.arange(m)
    t[-1] = interval.hi   # no rounding past the right end
    return t


def grid_size(interval: Interval, cells_per_unit: int = CELLS_PER_UNIT) -> int:
    """Number of nodes giving roughly ``cells_per_unit`` steps per unit length."""
    return max(2, int(round(interval.length * cells_per_unit)) + 1)


def sample(func: Callable[[np.ndarray], np.ndarray], interval: Interval,
           m: int | None = None) -> GridFunction:
    """Sample a vectorized callable at the nodes of a uniform grid."""
    if m is None:
        m = grid_size(interval)
    t = _nodes(interval, m)
    return GridFunction(interval, np.broadcast_to(func(t), t.shape))


def evaluate(f: GridFunction, t):
    """Piecewise-linear reading of ``f`` at ``t`` (scalar or array).

    Exact at nodes (points within 1e-10 steps of a node read the node value).
    Raises :class:`DomainError` for points outside the
    interval.
    """
    arr = np.asarray(t, dtype=float)
    lo, hi = f.interval.lo, f.interval.hi
    if np.any(arr < lo) or np.any(arr > hi) or np.any(np.isnan(arr)):
        raise DomainError(f"evaluation point outside [{lo}, {hi}]")
    pos = (arr - lo) / f.step
    near = np.round(pos)
    pos = np.where(np.abs(pos - near) < 1e-10, near, pos)   # snap to nodes
    j = np.clip(np.floor(pos).astype(np.int64), 0, f.m - 2)
    theta = pos - j
    v = f.values
    out = np.where(theta == 0.0, v[j],
                   np.where(theta == 1.0, v[j + 1], v[j] + (v[j + 1] - v[j]) * theta))
    return float(out) if out.ndim == 0 else out


def _check_same_grid(f: GridFunction, g: GridFunction) -> None:
    if f.m != g.m or f.interval != g.interval:
        raise ShapeError(f"grids differ: {f!r} vs {g!r}")


def integrate(f: GridFunction, rule: str = "trapezoid") -> float:
    """Integral of ``f`` over its interval.

    ``rule`` is ``"trapezoid"`` (piecewise-linear reading), ``"cell"``
    (equal cells partitioning the interval) or ``"riemann"`` (each node
    holds its value for one grid step, as for a right-continuous step
    function anchored at ``lo``).
    """
    v = f.values
    if rule == "trapezoid":
        return float(f.step * (v.sum() - 0.5 * (v[0] + v[-1])))
    if rule == "cell":
        return float(f.cell * v.sum())
    if rule == "riemann":
        return float(f.step * v.sum())
    raise DomainError(f"unknown quadrature rule {rule!r}")


def distance(f: GridFunction, g: GridFunction, norm: str = "sup") -> float:
    """Distance between two functions on the same grid.

    ``sup`` is the largest node difference; ``L1`` and ``L2`` integrate
    ``|f - g|^p`` with the cell measure.
    """
    _check_same_grid(f, g)
    diff = np.abs(f.values - g.values)
    if norm == "sup":
        return float(diff.max())
    if norm == "L1":
        return float(f.cell * diff.sum())
    if norm == "L2":
        return float(math.sqrt(f.cell * np.dot(diff, diff)))
    raise DomainError(f"unknown norm {norm!r}; expected one of {NORMS}")


def restrict(f: GridFunction, sub: Interval, tol: float = 1e-9) -> GridFunction:
    """Restriction of ``f`` to ``sub``, whose endpoints must be grid nodes."""
    if not f.interval.contains_interval(Interval(sub.lo + tol, sub.hi - tol)):
        raise DomainError(f"{sub} is not inside {f.interval}")
    a = (sub.lo - f.interval.lo) / f.step
    b = (sub.hi - f.interval.lo) / f.step
    ia, ib = int(round(a)), int(round(b))
    if abs(a - ia) > tol * max(1.0, abs(a)) or abs(b - ib) > tol * max(1.0, abs(b)):
        raise ShapeError(f"{sub} endpoints are not nodes of {f!r}")
    return GridFunction(sub, f.values[ia:ib + 1])


def to_csv(f: GridFunction, path) -> None:
    """Write ``t,value`` rows with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "value"])
        for t, v in zip(f.nodes, f.values):
            w.writerow([f"{t:.17g}", f"{v:.17g}"])


def from_csv(path) -> GridFunction:
    """Read a ``t,value`` CSV written by :func:`to_csv`; nodes must be uniform."""
    rows = list(csv.DictReader(Path(path).open()))
    if len(rows) < 2:
        raise ShapeError(f"{path}: need at least two rows")
    t = np.array([float(r["t"]) for r in rows])
    v = np.array([float(r["value"]) for r in rows])
    steps = np.diff(t)
    if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * max(1.0, np.abs(t).max()):
        raise ShapeError(f"{path}: nodes are not uniformly spaced")
    return GridFunction(Interval(t[0], t[-1]), v)
