"""Smoothing kernels, the Gasser-Mueller and kernel density estimators, bandwidths."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial
from scipy import sparse

from .errors import ConfigError, DomainError
from .grid import GridFunction, Interval, grid_size

REGIMES = ("iid", "mixing", "lrd")


@dataclass(frozen=True)
class Kernel:
    """Polynomial density on [-1, 1], zero outside.

    ``coef`` holds power-series coefficients of ``k`` on its support.
    Moments ``mu_j = int u^j k(u) du`` for j = 0, 1, 2 are computed by
    Gauss-Legendre quadrature when the kernel is built.
    """

    name: str
    coef: tuple[float, ...]
    moments: tuple[float, float, float] = field(init=False, compare=False)

    def __post_init__(self):
        x, w = np.polynomial.legendre.leggauss(32)
        kx = self.poly(x)
        if np.any(kx < -1e-14):
            raise DomainError(f"kernel {self.name} takes negative values")
        mom = [float(np.dot(w, x ** j * kx)) for j in range(3)]
        if self.symmetric:
            mom[1] = 0.0
        mom = tuple(mom)
        if abs(mom[0] - 1.0) > 1e-10:
            raise DomainError(f"kernel {self.name} integrates to {mom[0]}, not 1")
        object.__setattr__(self, "moments", mom)

    @property
    def poly(self) -> Polynomial:
        return Polynomial(self.coef)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return np.where(np.abs(u) <= 1.0, self.poly(u), 0.0)

    def deriv(self, u):
        """``k'(u)`` inside (-1, 1) and 0 outside; one-sided values at the ends."""
        u = np.asarray(u, dtype=float)
        return np.where(np.abs(u) <= 1.0, self.poly.deriv()(u), 0.0)

    def cdf(self, u):
        """``int_{-1}^{u} k``."""
        u = np.clip(np.asarray(u, dtype=float), -1.0, 1.0)
        P = self.poly.integ(lbnd=-1.0)
        return P(u)

    def first_moment_cdf(self, u):
        """``int_{-1}^{u} v k(v) dv``."""
        u = np.clip(np.asarray(u, dtype=float), -1.0, 1.0)
        P = (Polynomial([0.0, 1.0]) * self.poly).integ(lbnd=-1.0)
        return P(u)

    @property
    def symmetric(self) -> bool:
        return all(c == 0.0 for c in self.coef[1::2])

    def l2_norm_sq(self) -> float:
        P = (self.poly ** 2).integ(lbnd=-1.0)
        return float(P(1.0))


_ONE_MINUS_U2 = Polynomial([1.0, 0.0, -1.0])

KERNELS = {
    "epanechnikov": Kernel("epanechnikov", tuple((0.75 * _ONE_MINUS_U2).coef)),
    "quartic": Kernel("quartic", tuple((15 / 16 * _ONE_MINUS_U2 ** 2).coef)),
    "triweight": Kernel("triweight", tuple((35 / 32 * _ONE_MINUS_U2 ** 3).coef)),
    # Skewed on purpose: mu_1 = 1/5, so the estimator bias term is nonzero.
    "asymmetric-test": Kernel("asymmetric-test",
                              tuple((0.75 * _ONE_MINUS_U2 * Polynomial([1.0, 1.0])).coef)),
}


def get_kernel(name: str) -> Kernel:
    try:
        return KERNELS[name]
    except KeyError:
        raise ConfigError(f"unknown kernel {name!r}; choose from {sorted(KERNELS)}") from None


def kernel_moment(k: Kernel, j: int) -> float:
    if j not in (0, 1, 2):
        raise DomainError(f"moment order must be 0, 1 or 2, got {j}")
    return k.moments[j]


# -- bandwidths ---------------------------------------------------------------

@dataclass(frozen=True)
class BandwidthRule:
    """``h = a n^{-1/3}`` for iid/mixing data; the long-range rule otherwise.

    For ``regime == "lrd"`` the slowly varying part of the covariance is the
    constant ``l0``, so ``l1 = 2 l0^r / (r! (1 - rd)(2 - rd))`` and the
    bandwidth is ``(sqrt(l1) / a)^{2/(2+rd)} n^{-rd/(2+rd)}``.
    """

    regime: str = "iid"
    a: float = 1.0
    d: float | None = None
    r: int | None = None
    l0: float = 1.0

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ConfigError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if not self.a > 0:
            raise ConfigError(f"bandwidth constant a must be positive, got {self.a}")
        if self.regime == "lrd":
            if self.d is None or self.r is None:
                raise ConfigError("lrd bandwidth needs d and r")
            if not 0 < self.d < 1 or int(self.r) != self.r or self.r < 1:
                raise DomainError(f"need 0 < d < 1 and integer r >= 1, got d={self.d}, r={self.r}")
            if self.r * self.d >= 1:
                raise DomainError(f"long-range bandwidth needs r*d < 1, got {self.r * self.d}")
            if not self.l0 > 0:
                raise ConfigError("l0 must be positive")

    @property
    def exponent(self) -> float:
        """Power of n in the bandwidth."""
        if self.regime == "lrd":
            rd = self.r * self.d
            return -rd / (2 + rd)
        return -1.0 / 3.0

    @property
    def l1(self) -> float:
        r, d = self.r, self.d
        return 2.0 * self.l0 ** r / (math.factorial(r) * (1 - r * d) * (2 - r * d))


def bandwidth(rule: BandwidthRule, n: int) -> float:
    if n < 2:
        raise DomainError(f"need n >= 2, got {n}")
    if rule.regime == "lrd":
        rd = rule.r * rule.d
        const = (math.sqrt(rule.l1) / rule.a) ** (2.0 / (2.0 + rd))
        return const * n ** rule.exponent
    return rule.a * n ** (-1.0 / 3.0)


def lrd_scale(rule: BandwidthRule, n: int, h: float) -> float:
    """``h^{-2} n^{-1} (nh)^{1-rd/2} l1^{1/2}``: the long-range noise scale divided by |eta_r|.

    Equals ``rule.a`` when ``h = bandwidth(rule, n)``.
    """
    rd = rule.r * rule.d
    return h ** -2 / n * (n * h) ** (1 - rd / 2) * math.sqrt(rule.l1)


# -- Gasser-Mueller regression --------------------------------------------------

def interior_range(n: int, h: float) -> tuple[float, float]:
    """Points where the estimator does not see the flat extension of the data."""
    return 1.0 / n + h, 1.0 - h


@lru_cache(maxsize=32)
def gm_weights(n: int, k: Kernel, h: float, lo: float, hi: float, m: int) -> sparse.csr_matrix:
    """Sparse ``(m, n)`` matrix mapping responses at ``t_i = i/n`` to the estimate.

    Row j holds ``int K_h(t_j - u) phi_i(u) du``, where ``phi_i`` are the hat
    functions of linear interpolation on ``[1/n, 1]`` (flat beyond).  The
    kernel is polynomial, so each piece is integrated in closed form.
    """
    t = lo + (hi - lo) / (m - 1) * np.arange(m)
    P0, P1 = k.cdf, k.first_moment_cdf
    rows, cols, vals = [], [], []

    if n >= 2:
        i_lo = np.clip(np.floor(n * (t - h)).astype(np.int64) - 1, 1, n - 1)
        i_hi = np.clip(np.ceil(n * (t + h)).astype(np.int64) + 1, 1, n - 1)
        S = int((i_hi - i_lo).max()) + 1
        ii = i_lo[:, None] + np.arange(S)[None, :]
        ok = ii <= i_hi[:, None]
        ii = np.minimum(ii, n - 1)
        tt = t[:, None]
        a = np.maximum(ii / n, tt - h)
        b = np.minimum((ii + 1) / n, tt + h)
        ok &= b > a
        v1 = (tt - b) / h
        v2 = (tt - a) / h
        I0 = P0(v2) - P0(v1)
        I1 = P1(v2) - P1(v1)
        w_left = n * (((ii + 1) / n - tt) * I0 + h * I1)
        w_right = n * ((tt - ii / n) * I0 - h * I1)
        jj = np.broadcast_to(np.arange(m)[:, None], ii.shape)
        for w, col in ((w_left, ii - 1), (w_right, ii)):
            rows.append(jj[ok])
            cols.append(col[ok])
            vals.append(w[ok])

    j_all = np.arange(m)
    rows += [j_all, j_all]
    cols += [np.zeros(m, dtype=np.int64), np.full(m, n - 1, dtype=np.int64)]
    vals += [1.0 - P0((t - 1.0 / n) / h), P0((t - 1.0) / h)]
    W = sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(m, n)).tocsr()
    W.sum_duplicates()
    return W


def gasser_muller(y, k: Kernel, h: float, interval: Interval = Interval(0.0, 1.0),
                  m: int | None = None) -> GridFunction:
    """Gasser-Mueller estimate ``h^{-1} int k((t-u)/h) ybar(u) du`` on a uniform grid.

    ``y[i-1]`` is the response at design point ``t_i = i/n``; ``ybar`` is the
    linear interpolant on ``[1/n, 1]``, extended flat outside it.  Grid nodes
    outside :func:`interior_range` are affected by that extension.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if n < 2:
        raise ConfigError(f"need at least two observations, got {n}")
    if not 0 < h < 1:
        raise ConfigError(f"bandwidth must lie in (0, 1), got {h}")
    if n * h < 4:
        raise ConfigError(f"n*h = {n * h:.3g} < 4: too few points under the kernel")
    if m is None:
        m = grid_size(interval)
    W = gm_weights(n, k, float(h), float(interval.lo), float(interval.hi), int(m))
    return GridFunction(interval, W @ y)


# -- kernel density estimation ---------------------------------------------------

def kde(sample, k: Kernel, h: float, interval: Interval, m: int | None = None) -> GridFunction:
    """Kernel density estimate ``(nh)^{-1} sum_i k((t - t_i)/h)`` at the grid nodes."""
    s = np.asarray(sample, dtype=float).ravel()
    if s.size == 0:
        raise DomainError("kernel density estimate of an empty sample")
    if not h > 0:
        raise ConfigError(f"bandwidth must be positive, got {h}")
    if m is None:
        m = grid_size(interval)
    step = interval.length / (m - 1)
    first = np.ceil((s - h - interval.lo) / step).astype(np.int64)
    width = int(np.ceil(2 * h / step)) + 2
    idx = first[:, None] + np.arange(width)[None, :]
    ok = (idx >= 0) & (idx < m)
    u = (interval.lo + idx * step - s[:, None]) / h
    contrib = np.where(ok, k(u), 0.0)
    out = np.bincount(idx[ok], weights=contrib[ok], minlength=m) / (s.size * h)
    return GridFunction(interval, out)
