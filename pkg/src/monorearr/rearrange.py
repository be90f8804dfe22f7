"""Decreasing (Hardy-Littlewood-Polya) rearrangement of sampled functions.

Measures are taken with the cell reading of a grid function (see
:mod:`monorearr.grid`): on a finite interval of length L sampled at m
nodes, ``r_f(u) = (L / m) * #{j : f_j > u}``.  The rearrangement is the
right-continuous generalized inverse

    T_I(f)(t) = inf{u in f(I) : r_f(u) <= t - inf I},

evaluated at the grid nodes.  Comparisons ``r_f(u) <= t_j - lo`` are done
on integers (``count * (m - 1) <= j * m``) so that no rounding enters.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PreconditionError
from .grid import GridFunction, Interval, integrate, restrict

log = logging.getLogger(__name__)

TRUNCATED = "truncated-mass"


@dataclass(frozen=True)
class TruncationWindow:
    """Inner interval, enclosing interval and barrier level of a local rearrangement."""

    inner: Interval
    outer: Interval
    barrier: float

    def __post_init__(self):
        if not (self.outer.lo < self.inner.lo and self.inner.hi < self.outer.hi):
            raise DomainError(f"inner {self.inner} must lie strictly inside outer {self.outer}")
        if not (np.isfinite(self.barrier) and self.barrier > 0):
            raise DomainError(f"barrier must be finite and positive, got {self.barrier}")


def _counts_above(values: np.ndarray, levels: np.ndarray) -> np.ndarray:
    """``#{j : values_j > u}`` for every ``u`` in ``levels``."""
    s = np.sort(values)
    return s.size - np.searchsorted(s, levels, side="right")


def upper_level_set(f: GridFunction, u):
    """Cell measure of ``{t in I : f(t) > u}``; accepts scalar or array ``u``."""
    levels = np.asarray(u, dtype=float)
    out = f.cell * _counts_above(f.values, levels.ravel()).reshape(levels.shape)
    return float(out) if out.ndim == 0 else out


def _generalized_inverse(values: np.ndarray, budget: np.ndarray,
                         floor: float | None = None) -> np.ndarray:
    """Smallest candidate level ``u`` with ``#{values > u} <= budget``.

    Candidate levels are the sample values themselves (the range ``f(I)``),
    plus ``floor`` when given.
    """
    levels = np.unique(values)
    if floor is not None:
        levels = np.unique(np.append(levels[levels >= floor], floor))
    counts = _counts_above(values, levels)       # non-increasing in level
    idx = np.searchsorted(-counts, -budget, side="left")
    return levels[idx]


def rearrange_finite(f: GridFunction) -> GridFunction:
    """Decreasing rearrangement ``T_I(f)`` on the interval and grid of ``f``.

    The output is anchored at the left end of the interval.
    """
    m = f.m
    j = np.arange(m, dtype=np.int64)
    # r(u) <= j * step  <=>  count * L / m <= j * L / (m - 1)
    budget = (j * m) // (m - 1)
    return f.with_values(_generalized_inverse(f.values, budget), flags=())


def sort_oracle(f: GridFunction) -> GridFunction:
    """Node values sorted in descending order: the counting-measure rearrangement."""
    return f.with_values(sorted(f.values.tolist(), reverse=True), flags=())


def rearrange_density(f: GridFunction, tail_mass_bound: float = 1e-8) -> GridFunction:
    """Rearrangement on the half line of a nonnegative function.

    ``f`` is treated as zero off its grid, and each node carries one grid step
    of Lebesgue measure, so ``r_f(u) = step * #{f_j > u}`` for ``u >= 0``.
    The result ``T(f)(t) = inf{u >= 0 : r_f(u) <= t}`` lives on
    ``[0, hi - lo]`` with the same number of nodes.  Read as a right-continuous
    step function its integral (``integrate(..., rule="riemann")``) equals the
    Riemann sum of the input, which is the trapezoid integral when ``f``
    vanishes at both grid ends.

    If the mass held by the right edge node exceeds ``tail_mass_bound`` the
    grid has cut off part of the tail, and the result carries the
    ``"truncated-mass"`` flag.
    """
    v = f.values
    if np.any(v < 0):
        raise DomainError(f"density values must be nonnegative (min {v.min():g})")
    budget = np.arange(f.m, dtype=np.int64)
    out = _generalized_inverse(v, budget, floor=0.0)
    flags = ()
    edge_mass = f.step * v[-1]
    if edge_mass > tail_mass_bound:
        log.warning("density grid truncates mass %.3g at its right edge", edge_mass)
        flags = (TRUNCATED,)
    return GridFunction(Interval(0.0, f.interval.length), out, flags)


def check_window(phi: GridFunction, window: TruncationWindow) -> None:
    """Raise :class:`PreconditionError` unless the barrier conditions hold at the nodes.

    With ``I0 = window.inner``, ``I1 = window.outer`` and ``M = window.barrier``:

    * (2) ``phi >= -M`` on ``[inf I1, sup I0]`` and ``phi <= -M`` right of ``sup I1``;
    * (3) ``phi >= +M`` left of ``inf I1`` and ``phi <= +M`` on ``[inf I0, sup I1]``.
    """
    t, v = phi.nodes, phi.values
    i0, i1, M = window.inner, window.outer, window.barrier
    if not phi.interval.contains_interval(i1):
        raise PreconditionError(f"outer window {i1} exceeds the domain {phi.interval}")
    tol = 1e-9 * phi.step

    def check(mask, bound, upper, label):
        if not mask.any():
            return
        x = v[mask]
        bad = x.max() > bound if upper else x.min() < bound
        if bad:
            worst = x.max() if upper else x.min()
            raise PreconditionError(
                f"condition {label} violated: {'sup' if upper else 'inf'} phi = {worst:.6g} "
                f"{'>' if upper else '<'} {bound:.6g}")

    check((t >= i1.lo - tol) & (t <= i0.hi + tol), -M, False,
          f"(2) inf over [{i1.lo:g}, {i0.hi:g}] >= -M")
    check(t > i1.hi + tol, -M, True, f"(2) sup over ({i1.hi:g}, end] <= -M")
    check(t < i1.lo - tol, M, False, f"(3) inf over [start, {i1.lo:g}) >= +M")
    check((t >= i0.lo - tol) & (t <= i1.hi + tol), M, True,
          f"(3) sup over [{i0.lo:g}, {i1.hi:g}] <= +M")


def rearrange_local(phi: GridFunction, window: TruncationWindow) -> GridFunction:
    """``T_{I1}(phi)`` restricted to ``I0`` after checking the barrier conditions.

    Under the conditions this agrees on ``I0`` with the rearrangement over any
    larger finite interval containing ``I1``.
    """
    check_window(phi, window)
    t_outer = rearrange_finite(restrict(phi, window.outer))
    return restrict(t_outer, window.inner)


def density_mass(f: GridFunction) -> float:
    """Integral of a rearranged density read as a right-continuous step function."""
    return integrate(f, rule="riemann")
