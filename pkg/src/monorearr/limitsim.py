"""Rescaled local processes and draws of the limit variable ``T(A s + v(s))(0) + Delta``.

The smoothed disturbance is ``v(s) = c * int w(s - u) k'(u) du`` with ``w`` a
two-sided Brownian motion or fractional Brownian motion.  Draws use the
local rearrangement: ``y = A s + v`` is rearranged over ``[-c_win/2, c_win/2]``
after checking the barrier conditions on the wider path ``[-c_win, c_win]``;
when they fail, the window doubles over the same driving path.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dependence import fgn, replication_seed
from .errors import DomainError, PreconditionError, ShapeError, SimulationError
from .grid import GridFunction, Interval, evaluate, grid_size, restrict
from .kernels import Kernel
from .rearrange import TruncationWindow, rearrange_local

log = logging.getLogger(__name__)

PROCESSES = ("brownian", "fbm")


@dataclass(frozen=True)
class LimitParams:
    A: float
    Delta: float = 0.0
    c: float = 1.0
    process: str = "brownian"
    beta: float = 0.5
    window: float = 8.0
    grid_step: float = 1.0 / 256
    max_expansions: int = 4

    def __post_init__(self):
        if not self.A < 0:
            raise DomainError(f"local slope A must be negative, got {self.A}")
        if not self.c >= 0:
            raise DomainError(f"process scale c must be nonnegative, got {self.c}")
        if self.process not in PROCESSES:
            raise DomainError(f"process must be one of {PROCESSES}, got {self.process!r}")
        if self.process == "fbm" and not 0.5 < self.beta < 1:
            raise DomainError(f"fBm index must lie in (1/2, 1), got {self.beta}")
        if not self.window > 2:
            raise DomainError(f"window must exceed 2, got {self.window}")
        half = self.window / 2 / self.grid_step
        if abs(half - round(half)) > 1e-9 or abs(1 / self.grid_step - round(1 / self.grid_step)) > 1e-9:
            raise DomainError("grid_step must divide both 1 and window/2")


# -- local processes ---------------------------------------------------------------

def partial_sum_process(eps, sigma_n: float, n: int | None = None,
                        zero_index: int = 0) -> GridFunction:
    """Two-sided partial-sum process, linearly interpolated.

    ``eps[zero_index]`` is ``eps_0``.  Node ``(i + 1/2)/n`` carries
    ``(eps_0/2 + eps_1 + ... + eps_i) / sigma_n`` for ``i >= 0`` and
    ``-(eps_0/2 + eps_{i+1} + ... + eps_{-1}) / sigma_n`` for ``i < 0``.
    The returned grid has step ``1/(2n)``; the extra nodes are midpoints.
    """
    if not sigma_n > 0:
        raise DomainError(f"sigma_n must be positive, got {sigma_n}")
    e = np.asarray(eps, dtype=float)
    if e.size < 2:
        raise DomainError("partial-sum process needs at least two observations")
    if not 0 <= zero_index < e.size:
        raise DomainError("zero_index out of range")
    if n is None:
        n = e.size
    e0 = e[zero_index]
    right = 0.5 * e0 + np.concatenate([[0.0], np.cumsum(e[zero_index + 1:])])
    rev = e[:zero_index][::-1]
    left = -0.5 * e0 - np.concatenate([[0.0], np.cumsum(rev)[:-1]])[::-1]
    knots = np.concatenate([left, right]) / sigma_n
    # midpoints as extra nodes put s = 0 on the grid
    values = np.empty(2 * knots.size - 1)
    values[0::2] = knots
    values[1::2] = 0.5 * (knots[:-1] + knots[1:])
    lo = (-zero_index + 0.5) / n
    hi = (e.size - 1 - zero_index + 0.5) / n
    return GridFunction(Interval(lo, hi), values)


def local_empirical_process(sample, t0: float, delta_n: float,
                            cdf: Callable[[np.ndarray], np.ndarray],
                            s_max: float = 3.0, m: int | None = None,
                            sigma: float | None = None) -> GridFunction:
    """Centered empirical process around ``t0`` on scale ``delta_n``, over ``[-s_max, s_max]``.

    ``sigma`` defaults to the iid normaliser ``sqrt(n p (1 - p))`` with
    ``p = F(t0 + delta_n) - F(t0)``.
    """
    if not delta_n > 0:
        raise DomainError(f"delta_n must be positive, got {delta_n}")
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    if sigma is None:
        p = float(cdf(t0 + delta_n) - cdf(t0))
        sigma = math.sqrt(n * p * (1 - p))
    if not sigma > 0:
        raise DomainError("degenerate window: sigma_{n,delta_n} = 0")
    if m is None:
        m = grid_size(Interval(-s_max, s_max))
    if m % 2 == 0:
        m += 1
    s = np.linspace(-s_max, s_max, m)
    s[m // 2] = 0.0
    pts = t0 + s * delta_n
    counts = np.searchsorted(x, pts, side="right") - np.searchsorted(x, t0, side="right")
    centred = counts - n * (np.asarray(cdf(pts), dtype=float) - float(cdf(t0)))
    centred[m // 2] = 0.0
    return GridFunction(Interval(-s_max, s_max), centred / sigma)


def smoothed_disturbance(w: GridFunction, k: Kernel, c: float) -> GridFunction:
    """``c * int w(s - u) k'(u) du`` at the nodes of ``w`` lying at least 1 from its ends.

    The integral over ``u in [-1, 1]`` is a trapezoid rule.  When the grid step
    divides 1 the rule reuses the nodes of ``w`` directly; otherwise ``w`` is
    interpolated.
    """
    lo, hi, step = w.interval.lo, w.interval.hi, w.step
    nodes = w.nodes
    keep = (nodes - 1.0 >= lo - 1e-12 * step) & (nodes + 1.0 <= hi + 1e-12 * step)
    if keep.sum() < 2:
        raise ShapeError(f"window {w.interval} too narrow for a kernel of support [-1, 1]")
    out_nodes = nodes[keep]
    per_unit = 1.0 / step
    L = int(round(per_unit))
    if abs(per_unit - L) < 1e-9:
        u = np.arange(-L, L + 1) * step
        taps = k.deriv(u) * step
        taps[0] *= 0.5
        taps[-1] *= 0.5
        # sum_l taps[l] * w[j - (l - L)]
        vals = np.convolve(w.values, taps, mode="valid")
    else:
        L = int(math.ceil(per_unit))
        u = np.linspace(-1.0, 1.0, 2 * L + 1)
        du = u[1] - u[0]
        taps = k.deriv(u) * du
        taps[0] *= 0.5
        taps[-1] *= 0.5
        pts = np.clip(out_nodes[:, None] - u[None, :], lo, hi)
        vals = np.interp(pts, nodes, w.values) @ taps
    return GridFunction(Interval(out_nodes[0], out_nodes[-1]), c * vals)


# -- limit draws ---------------------------------------------------------------------

def driving_path(process: str, beta: float, half_width: float, step: float,
                 rng: np.random.Generator) -> GridFunction:
    """Two-sided Brownian or fractional Brownian path on ``[-half_width, half_width]``, zero at 0."""
    N = int(round(half_width / step))
    if process == "brownian":
        incr = math.sqrt(step) * rng.standard_normal(2 * N)
    else:
        incr = step ** beta * fgn(2 * N, beta, rng)
    path = np.concatenate([[0.0], np.cumsum(incr)])
    path -= path[N]
    return GridFunction(Interval(-N * step, N * step), path)


def _process_on(p: LimitParams, k: Kernel, w: GridFunction, window: float) -> GridFunction:
    """``A s + v(s)`` on ``[-window, window]`` from the part of ``w`` it depends on."""
    v = smoothed_disturbance(restrict(w, Interval(-window - 1.0, window + 1.0)), k, p.c)
    return v.with_values(p.A * v.nodes + v.values)


def limit_process(p: LimitParams, k: Kernel, rng: np.random.Generator,
                  window: float | None = None) -> GridFunction:
    """``y(s) = A s + v(s)`` on ``[-window, window]`` (``Delta`` not included)."""
    half = p.window if window is None else window
    w = driving_path(p.process, p.beta, half + 1.0, p.grid_step, rng)
    return _process_on(p, k, w, half)


def window_for(p: LimitParams, window: float) -> TruncationWindow:
    return TruncationWindow(inner=Interval(-1.0, 1.0),
                            outer=Interval(-window / 2, window / 2),
                            barrier=abs(p.A) * window / 4)


def rearranged_at_zero(y: GridFunction, window: TruncationWindow) -> float:
    return evaluate(rearrange_local(y, window), 0.0)


def widest_window(p: LimitParams) -> float:
    return p.window * 2 ** p.max_expansions


def draw_from_path(p: LimitParams, k: Kernel, w: GridFunction) -> float:
    """``T(A s + v(s))(0) + Delta`` for a given driving path ``w``.

    Starting from ``p.window``, the window doubles whenever the barrier
    conditions fail on it, at most ``p.max_expansions`` times; after that
    :class:`SimulationError` is raised.  ``w`` must cover
    ``[-widest_window(p) - 1, widest_window(p) + 1]``.
    """
    win = p.window
    for _ in range(p.max_expansions + 1):
        y = _process_on(p, k, w, win)
        try:
            return rearranged_at_zero(y, window_for(p, win)) + p.Delta
        except PreconditionError as exc:
            log.debug("window %g: %s", win, exc)
            win *= 2
    raise SimulationError(f"no valid truncation window after {p.max_expansions} expansions")


def limit_draw(p: LimitParams, k: Kernel, seed: int) -> float:
    """One draw of ``T(A s + v(s))(0) + Delta``.

    A single driving path is simulated on the widest window that may be
    needed, so the draw does not depend on which window passed the barrier
    checks (see :func:`draw_from_path`).
    """
    rng = np.random.default_rng(seed)
    w = driving_path(p.process, p.beta, widest_window(p) + 1.0, p.grid_step, rng)
    try:
        return draw_from_path(p, k, w)
    except SimulationError as exc:
        raise SimulationError(f"seed {seed}: {exc}") from None


def limit_draws(p: LimitParams, k: Kernel, n_draws: int, master_seed: int):
    """``n_draws`` independent draws; returns ``(draws, n_dropped)``.

    Draw ``i`` uses the stream ``(master_seed, i)``, so results do not depend
    on evaluation order.
    """
    out = []
    dropped = 0
    for i in range(n_draws):
        try:
            out.append(limit_draw(p, k, replication_seed(master_seed, i)))
        except SimulationError as exc:
            log.warning("%s", exc)
            dropped += 1
    return np.array(out), dropped
