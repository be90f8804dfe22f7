import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from monorearr.grid import GridFunction, Interval

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False, allow_subnormal=False)


@st.composite
def grid_functions(draw, min_m=2, max_m=60, elements=finite, interval=None):
    m = draw(st.integers(min_m, max_m))
    if interval is None:
        lo = draw(st.floats(-10, 10, allow_nan=False))
        length = draw(st.floats(0.1, 10, allow_nan=False))
        interval = Interval(lo, lo + length)
    values = draw(arrays(np.float64, m, elements=elements))
    return GridFunction(interval, values)


@st.composite
def grid_pairs(draw, max_m=60):
    f = draw(grid_functions(max_m=max_m))
    values = draw(arrays(np.float64, f.m, elements=finite))
    return f, f.with_values(values)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
