"""Monotone rearrangement of kernel estimators, with Monte Carlo tooling for
their limit laws under independent, mixing and long-range dependent errors."""

from .dependence import DependenceModel, generate, hermite_coeff, replication_seed
from .errors import (ConfigError, DomainError, NumericalError, PreconditionError,
                     ShapeError, SimulationError)
from .experiments import ExperimentConfig, Report, ks_distance, rate_fit, run_density, run_regression
from .grid import GridFunction, Interval, distance, evaluate, integrate, restrict, sample
from .kernels import BandwidthRule, Kernel, bandwidth, gasser_muller, get_kernel, kde
from .limitsim import LimitParams, limit_draw, limit_draws
from .rearrange import (TruncationWindow, rearrange_density, rearrange_finite, rearrange_local,
                        upper_level_set)

__version__ = "0.1.0"
