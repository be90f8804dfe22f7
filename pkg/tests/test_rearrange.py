import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import finite, grid_functions, grid_pairs
from monorearr.errors import DomainError, PreconditionError
from monorearr.grid import GridFunction, Interval, distance, integrate, restrict, sample
from monorearr.rearrange import (TRUNCATED, TruncationWindow, check_window, density_mass,
                                 rearrange_density, rearrange_finite, rearrange_local,
                                 sort_oracle, upper_level_set)
from oracles import level_sweep_density, level_sweep_rearrangement

UNIT = Interval(0.0, 1.0)
integers = st.integers(-50, 50).map(float)


class TestUpperLevelSet:
    def test_constant(self):
        f = GridFunction(UNIT, np.full(101, 3.0))
        assert upper_level_set(f, 2.999) == 1.0
        assert upper_level_set(f, 3.0) == 0.0

    def test_linear(self):
        f = sample(lambda t: 1 - t, UNIT, 1001)
        for u in np.linspace(0, 0.99, 12):
            assert abs(upper_level_set(f, u) - (1 - u)) <= f.step

    @given(grid_functions())
    def test_range_and_monotone(self, f):
        levels = np.sort(np.concatenate([f.values, f.values - 1, f.values + 1]))
        r = upper_level_set(f, levels)
        assert np.all(np.diff(r) <= 0)
        assert upper_level_set(f, f.values.min() - 1) == pytest.approx(f.interval.length)
        assert upper_level_set(f, f.values.max()) == 0.0

    def test_flat_region_gives_jump(self):
        # 300 of 1000 cells sit at level 0.5
        m = 1000
        v = np.concatenate([np.linspace(1.0, 0.6, 350), np.full(300, 0.5), np.linspace(0.4, 0.0, 350)])
        f = GridFunction(UNIT, v)
        assert m == f.m
        jump = upper_level_set(f, np.nextafter(0.5, 0)) - upper_level_set(f, 0.5)
        assert jump == pytest.approx(0.3, abs=1e-12)

    def test_jump_gives_flat_region(self):
        # decreasing function with a drop of 1 at t = 0.5 (two-node steep ramp)
        f = sample(lambda t: np.where(t < 0.5, 2.0 - t, 0.5 - t), UNIT, 1001)
        levels = np.linspace(0.01, 1.49, 50)   # strictly inside the gap (0, 1.5)
        r = upper_level_set(f, levels)
        assert np.all(r == r[0])
        assert abs(r[0] - 0.5) <= f.step

    @given(grid_functions(elements=integers), integers)
    def test_shift_algebra(self, f, c):
        u = np.arange(-120, 121, dtype=float)
        np.testing.assert_array_equal(upper_level_set(f.with_values(f.values + c), u),
                                      upper_level_set(f, u - c))

    @given(grid_functions(elements=integers), st.sampled_from([0.25, 0.5, 2.0, 4.0]))
    def test_scale_algebra(self, f, c):
        u = np.arange(-240, 241, dtype=float) / 4
        np.testing.assert_array_equal(upper_level_set(f.with_values(c * f.values), u),
                                      upper_level_set(f, u / c))

    @given(grid_pairs())
    def test_order(self, pair):
        f, g = pair
        g = g.with_values(np.maximum(f.values, g.values))
        u = np.linspace(-1e3, 1e3, 41)
        assert np.all(upper_level_set(f, u) <= upper_level_set(g, u))


class TestRearrangeFinite:
    def test_fixed_point(self):
        f = sample(lambda t: np.exp(-t), UNIT, 257)
        np.testing.assert_array_equal(rearrange_finite(f).values, f.values)

    def test_reflection(self):
        f = sample(lambda t: t, UNIT, 513)
        np.testing.assert_array_equal(rearrange_finite(f).values, f.values[::-1])
        np.testing.assert_allclose(rearrange_finite(f).values, 1 - f.nodes, atol=1e-15)

    def test_small_example(self):
        f = GridFunction(UNIT, [1.0, 3.0, 2.0])
        np.testing.assert_array_equal(rearrange_finite(f).values, [3.0, 2.0, 1.0])
        np.testing.assert_array_equal(sort_oracle(f).values, [3.0, 2.0, 1.0])
        np.testing.assert_array_equal(sort_oracle(GridFunction(UNIT, [3.0, 2.0, 1.0])).values,
                                      [3.0, 2.0, 1.0])

    @given(grid_functions(max_m=25))
    def test_matches_level_sweep(self, f):
        expect = level_sweep_rearrangement(f.values, f.interval.lo, f.interval.hi)
        np.testing.assert_array_equal(rearrange_finite(f).values, expect)

    @given(grid_functions(max_m=300))
    def test_equals_sort(self, f):
        np.testing.assert_array_equal(rearrange_finite(f).values, sort_oracle(f).values)

    @given(grid_functions(elements=st.integers(-3, 3).map(float)))
    def test_ties(self, f):
        np.testing.assert_array_equal(rearrange_finite(f).values, sort_oracle(f).values)

    @given(grid_functions())
    def test_monotone_and_idempotent(self, f):
        t = rearrange_finite(f)
        assert np.all(np.diff(t.values) <= 0)
        np.testing.assert_array_equal(rearrange_finite(t).values, t.values)
        assert t.interval == f.interval

    @given(grid_functions())
    def test_equimeasurable(self, f):
        u = np.linspace(f.values.min() - 1, f.values.max() + 1, 64)
        u = np.concatenate([u, f.values])
        np.testing.assert_array_equal(upper_level_set(f, u),
                                      upper_level_set(rearrange_finite(f), u))

    @given(grid_pairs())
    def test_contraction(self, pair):
        f, g = pair
        tf, tg = rearrange_finite(f), rearrange_finite(g)
        for norm in ("sup", "L1", "L2"):
            d = distance(f, g, norm)
            assert distance(tf, tg, norm) <= d + 1e-12 * max(1.0, d)


class TestAlgebra:
    @given(grid_functions(), st.floats(-100, 100))
    def test_additive_constant(self, f, c):
        lhs = rearrange_finite(f.with_values(f.values + c)).values
        np.testing.assert_array_equal(lhs, rearrange_finite(f).values + c)

    @given(grid_functions(), st.floats(1e-3, 1e3))
    def test_positive_scaling(self, f, c):
        lhs = rearrange_finite(f.with_values(c * f.values)).values
        np.testing.assert_array_equal(lhs, c * rearrange_finite(f).values)

    @given(grid_pairs())
    def test_order_preserving(self, pair):
        f, g = pair
        g = g.with_values(np.maximum(f.values, g.values))
        assert np.all(rearrange_finite(f).values <= rearrange_finite(g).values)

    @given(grid_functions(), st.floats(0.1, 10))
    def test_dilation(self, f, c):
        # f(c .) on I/c has the same node values as f on I
        g = GridFunction(f.interval.scaled(c), f.values)
        np.testing.assert_array_equal(rearrange_finite(g).values, rearrange_finite(f).values)
        t = rearrange_finite(g).nodes
        assert np.allclose(c * t, rearrange_finite(f).nodes, rtol=1e-12, atol=1e-12)

    @given(grid_functions(), st.floats(-10, 10))
    def test_translation(self, f, c):
        g = GridFunction(f.interval.shifted(c), f.values)
        np.testing.assert_array_equal(rearrange_finite(g).values, rearrange_finite(f).values)


class TestRearrangeDensity:
    def test_exponential_fixed(self):
        f = sample(lambda t: np.exp(-t), Interval(0.0, 20.0), 20 * 256 + 1)
        out = rearrange_density(f)
        assert out.interval == Interval(0.0, 20.0)
        np.testing.assert_array_equal(out.values, f.values)
        assert not out.flags

    def test_indicator_moves_to_origin(self):
        f = GridFunction(Interval(0.0, 4.0), np.where(np.arange(401) < 100, 0.0,
                                                      np.where(np.arange(401) < 200, 1.0, 0.0)))
        out = rearrange_density(f)
        np.testing.assert_array_equal(out.values[:100], 1.0)
        np.testing.assert_array_equal(out.values[100:], 0.0)

    def test_triangle_against_sweep(self):
        f = sample(lambda t: np.maximum(0.0, 1 - np.abs(t - 1)), Interval(-0.5, 2.5), 301)
        out = rearrange_density(f)
        np.testing.assert_array_equal(out.values, level_sweep_density(f.values, f.step))
        assert np.all(np.diff(out.values) <= 0)
        assert integrate(out, "riemann") == pytest.approx(integrate(f), abs=1e-14)

    @given(grid_functions(max_m=40, elements=st.floats(0, 100, allow_subnormal=False)))
    def test_density_sweep_random(self, f):
        out = rearrange_density(f, tail_mass_bound=np.inf)
        np.testing.assert_array_equal(out.values, level_sweep_density(f.values, f.step))
        assert density_mass(out) == pytest.approx(integrate(f, "riemann"), rel=1e-12, abs=1e-12)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            rearrange_density(GridFunction(UNIT, [0.0, -1.0, 0.0]))

    def test_edge_mass_flagged(self):
        f = sample(lambda t: np.exp(-t), Interval(0.0, 2.0), 201)
        assert TRUNCATED in rearrange_density(f).flags
        assert TRUNCATED not in rearrange_density(f, tail_mass_bound=0.01).flags


def _ramp_window():
    return TruncationWindow(Interval(-1.0, 1.0), Interval(-3.0, 3.0), 2.0)


class TestRearrangeLocal:
    def test_decreasing_is_fixed(self):
        phi = sample(lambda t: -t, Interval(-5.0, 5.0), 1001)
        out = rearrange_local(phi, _ramp_window())
        assert out.interval == Interval(-1.0, 1.0)
        np.testing.assert_allclose(out.values, -out.nodes, atol=phi.step)

    def test_larger_domains_agree(self):
        phi = sample(lambda t: -t, Interval(-5.0, 5.0), 1001)
        local = rearrange_local(phi, _ramp_window())
        for J in (Interval(-4.0, 4.0), Interval(-5.0, 5.0)):
            wide = restrict(rearrange_finite(restrict(phi, J)), local.interval)
            np.testing.assert_allclose(wide.values, local.values, atol=phi.step)

    def test_flat_violates_barrier(self):
        phi = GridFunction(Interval(-5.0, 5.0), np.zeros(101))
        w = TruncationWindow(Interval(-1.0, 1.0), Interval(-3.0, 3.0), 1.0)
        with pytest.raises(PreconditionError, match=r"\(2\)"):
            rearrange_local(phi, w)

    def test_each_condition_named(self):
        base = sample(lambda t: -t, Interval(-5.0, 5.0), 1001).values.copy()
        w = _ramp_window()
        cases = {
            r"\(2\) inf": (500, -2.5),        # dip below -M inside [inf I1, sup I0]
            r"\(2\) sup": (950, 0.0),         # rise above -M right of I1
            r"\(3\) inf": (50, 0.0),          # dip below M left of I1
            r"\(3\) sup": (700, 2.5),         # rise above M on [inf I0, sup I1]
        }
        for label, (idx, val) in cases.items():
            v = base.copy()
            v[idx] = val
            with pytest.raises(PreconditionError, match=label):
                check_window(GridFunction(Interval(-5.0, 5.0), v), w)

    def test_window_validation(self):
        with pytest.raises(DomainError):
            TruncationWindow(Interval(-1.0, 1.0), Interval(-1.0, 3.0), 1.0)
        with pytest.raises(DomainError):
            TruncationWindow(Interval(-1.0, 1.0), Interval(-2.0, 2.0), 0.0)
