"""Seeded error sequences for the iid, AR(1) and Gaussian-subordinated regimes.

Long-range dependent errors are ``g(xi_i)`` with ``xi`` fractional Gaussian
noise of Hurst index ``H = 1 - d/2``, whose autocovariance behaves like
``H(2H-1) k^{-d}``.  Hermite polynomials are the probabilists' ones,
``He_k``, orthogonal under the standard normal with ``E[He_k^2] = k!``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import hermite_e
from scipy.signal import lfilter

from .errors import DomainError, NumericalError

REGIMES = ("iid", "ar1", "lrd")


@dataclass(frozen=True)
class Transform:
    """Subordinating function ``g`` with the points where it is discontinuous."""

    name: str
    func: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    breakpoints: tuple[float, ...] = ()

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))


def hermite_transform(r: int) -> Transform:
    coef = np.zeros(r + 1)
    coef[r] = 1.0
    return Transform(f"hermite_{r}", lambda x: hermite_e.hermeval(x, coef))


SIGN = Transform("sign", np.sign, breakpoints=(0.0,))


@dataclass(frozen=True)
class DependenceModel:
    regime: str = "iid"
    sigma: float = 1.0
    rho: float = 0.0
    sigma_e: float = 1.0
    d: float | None = None
    r: int = 1
    transform: Transform | None = None

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise DomainError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if self.regime == "iid" and not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")
        if self.regime == "ar1":
            if not abs(self.rho) < 1:
                raise DomainError(f"AR(1) needs |rho| < 1, got {self.rho}")
            if not self.sigma_e > 0:
                raise DomainError(f"sigma_e must be positive, got {self.sigma_e}")
        if self.regime == "lrd":
            if self.d is None or not 0 < self.d < 1:
                raise DomainError(f"long-range model needs 0 < d < 1, got {self.d}")
            if int(self.r) != self.r or self.r < 1:
                raise DomainError(f"Hermite rank must be a positive integer, got {self.r}")
            if self.r * self.d >= 1:
                raise DomainError(f"need r*d < 1 for long-range dependence, got {self.r * self.d}")

    @property
    def hurst(self) -> float:
        return 1.0 - self.d / 2.0

    @property
    def g(self) -> Transform:
        return self.transform if self.transform is not None else hermite_transform(self.r)

    @property
    def beta(self) -> float:
        """Self-similarity index ``1 - rd/2`` of the partial-sum limit."""
        return 1.0 - self.r * self.d / 2.0


@dataclass(frozen=True)
class SeriesStats:
    kappa2: float
    sigma_n2: float
    beta: float


def replication_seed(master_seed: int, *key: int) -> int:
    """64-bit seed of the stream labelled ``key`` under ``master_seed``.

    Streams depend only on ``(master_seed, key)``, never on execution order.
    """
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def fgn_autocovariance(k, hurst: float):
    k = np.abs(np.asarray(k, dtype=float))
    H2 = 2.0 * hurst
    return 0.5 * (np.abs(k + 1) ** H2 - 2 * k ** H2 + np.abs(k - 1) ** H2)


@lru_cache(maxsize=16)
def _embedding_sqrt_eigs(n: int, hurst: float) -> np.ndarray:
    gamma = fgn_autocovariance(np.arange(n + 1), hurst)
    row = np.concatenate([gamma, gamma[n - 1:0:-1]])
    lam = np.fft.fft(row).real
    if lam.min() < -1e-10 * lam.max():
        raise NumericalError(f"circulant embedding has a negative eigenvalue {lam.min():.3g}")
    out = np.sqrt(np.clip(lam, 0.0, None) / row.size)
    out.setflags(write=False)
    return out


def fgn(n: int, hurst: float, seed) -> np.ndarray:
    """Unit-variance fractional Gaussian noise by circulant embedding (Davies-Harte)."""
    if n < 2:
        raise DomainError(f"need n >= 2, got {n}")
    if not 0.5 <= hurst < 1:
        raise DomainError(f"hurst must lie in [1/2, 1), got {hurst}")
    rng = _rng(seed)
    scale = _embedding_sqrt_eigs(int(n), float(hurst))
    M = scale.size
    z = rng.standard_normal(M) + 1j * rng.standard_normal(M)
    return np.fft.fft(scale * z).real[:n]


def generate(model: DependenceModel, n: int, seed) -> np.ndarray:
    """Stationary mean-zero draw of length ``n``; deterministic in ``(model, n, seed)``."""
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}")
    rng = _rng(seed)
    if model.regime == "iid":
        return model.sigma * rng.standard_normal(n)
    if model.regime == "ar1":
        e = model.sigma_e * rng.standard_normal(n)
        e[0] /= math.sqrt(1.0 - model.rho ** 2)
        return lfilter([1.0], [1.0, -model.rho], e)
    xi = fgn(max(n, 2), model.hurst, rng)[:n]
    return model.g(xi)


# -- spectral quantities ----------------------------------------------------------

def _he(k: int, x: np.ndarray) -> np.ndarray:
    coef = np.zeros(k + 1)
    coef[k] = 1.0
    return hermite_e.hermeval(x, coef)


def _gauss_hermite(f, nodes: int) -> float:
    x, w = hermite_e.hermegauss(nodes)
    return float(np.dot(w, f(x)) / math.sqrt(2 * math.pi))


def _piecewise_legendre(f, breaks: Sequence[float], nodes: int, half_width: float) -> float:
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = [-half_width, *sorted(b for b in breaks if abs(b) < half_width), half_width]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        u = 0.5 * (b - a) * x + 0.5 * (a + b)
        phi = np.exp(-0.5 * u * u) / math.sqrt(2 * math.pi)
        total += 0.5 * (b - a) * float(np.dot(w, f(u) * phi))
    return total


def hermite_coeff(g, k: int, nodes: int = 64, breakpoints: Sequence[float] | None = None,
                  tol: float = 1e-10) -> float:
    """``eta_k = E[g(xi) He_k(xi)]`` for standard normal ``xi``.

    Smooth ``g`` uses Gauss-Hermite quadrature.  When ``g`` has jumps (given by
    ``breakpoints``, or carried by a :class:`Transform`) Gauss-Hermite does not
    converge, so the real line is cut at the jumps and each piece is integrated
    by Gauss-Legendre on ``[-16, 16]``.  Either way the rule is rerun with twice
    the nodes and :class:`NumericalError` is raised if the two disagree.
    """
    if k < 0 or int(k) != k:
        raise DomainError(f"order must be a nonnegative integer, got {k}")
    if nodes < 64:
        raise DomainError("use at least 64 quadrature nodes")
    if breakpoints is None:
        breakpoints = getattr(g, "breakpoints", ())

    def integrand(x):
        return np.asarray(g(x), dtype=float) * _he(k, x)

    if breakpoints:
        half = 16.0 + math.sqrt(k)
        est = [_piecewise_legendre(integrand, breakpoints, q, half) for q in (nodes, 2 * nodes)]
    else:
        est = [_gauss_hermite(integrand, q) for q in (nodes, 2 * nodes)]
    scale = max(1.0, math.sqrt(math.factorial(k)))
    if abs(est[1] - est[0]) > tol * scale:
        raise NumericalError(
            f"Hermite coefficient {k} not converged: {est[0]!r} vs {est[1]!r}")
    return est[1]


def hermite_rank(g, max_order: int = 10, tol: float = 1e-8) -> int:
    """Index of the first nonzero Hermite coefficient with ``k >= 1``."""
    for k in range(1, max_order + 1):
        if abs(hermite_coeff(g, k)) > tol:
            return k
    raise NumericalError(f"no nonzero Hermite coefficient up to order {max_order}")


def long_run_variance(model: DependenceModel) -> float:
    """``Cov(0) + 2 sum_{k>=1} Cov(k)`` for the weakly dependent regimes."""
    if model.regime == "iid":
        return model.sigma ** 2
    if model.regime == "ar1":
        return model.sigma_e ** 2 / (1.0 - model.rho) ** 2
    raise DomainError("long-run variance is infinite under long-range dependence "
                      "(covariances are not summable)")


def autocovariance(model: DependenceModel, k, max_order: int = 12):
    """Autocovariance of the error sequence at integer lags ``k``."""
    k = np.abs(np.asarray(k))
    if model.regime == "iid":
        return np.where(k == 0, model.sigma ** 2, 0.0)
    if model.regime == "ar1":
        return model.sigma_e ** 2 / (1 - model.rho ** 2) * model.rho ** k
    rho = fgn_autocovariance(k, model.hurst)
    if model.transform is None:
        r = model.r
        return math.factorial(r) * rho ** r
    out = np.zeros_like(rho, dtype=float)
    for j in range(1, max_order + 1):
        eta = hermite_coeff(model.g, j)
        out = out + eta ** 2 / math.factorial(j) * rho ** j
    return out


def partial_sum_variance(model: DependenceModel, n: int) -> float:
    """``Var(eps_1 + ... + eps_n)`` from the exact autocovariances."""
    if model.regime == "iid":
        return n * model.sigma ** 2
    if model.regime == "lrd" and model.transform is None and model.r == 1:
        return float(n) ** (2 * model.hurst)
    lags = np.arange(1, n)
    gam = autocovariance(model, np.concatenate([[0], lags]))
    return float(n * gam[0] + 2.0 * np.dot(n - lags, gam[1:]))


def series_stats(model: DependenceModel, n: int) -> SeriesStats:
    kappa2 = math.inf if model.regime == "lrd" else long_run_variance(model)
    beta = model.beta if model.regime == "lrd" else 0.5
    return SeriesStats(kappa2=kappa2, sigma_n2=partial_sum_variance(model, n), beta=beta)
