import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import expon

from monorearr.dependence import replication_seed
from monorearr.errors import DomainError, PreconditionError, ShapeError, SimulationError
from monorearr.experiments import ks_distance
from monorearr.grid import GridFunction, Interval, evaluate, sample
from monorearr.kernels import get_kernel
from monorearr.limitsim import (LimitParams, draw_from_path, driving_path, limit_draw,
                                limit_draws, limit_process, local_empirical_process,
                                partial_sum_process, rearranged_at_zero, smoothed_disturbance,
                                widest_window, window_for)
from oracles import convolution_loop

EPA = get_kernel("epanechnikov")
FIXTURE = Path(__file__).parent / "fixtures" / "limit_draw_quantiles.json"


class TestParams:
    @pytest.mark.parametrize("kwargs", [dict(A=0.0), dict(A=-1.0, c=-1.0),
                                        dict(A=-1.0, process="levy"),
                                        dict(A=-1.0, process="fbm", beta=0.5),
                                        dict(A=-1.0, grid_step=0.3)])
    def test_invalid(self, kwargs):
        with pytest.raises(DomainError):
            LimitParams(**kwargs)


class TestPartialSum:
    def test_zero_noise(self):
        w = partial_sum_process(np.zeros(9), 1.0, zero_index=4)
        assert np.all(w.values == 0)

    def test_hand_values(self):
        w = partial_sum_process([1.0, 1.0, 1.0], 1.0)
        n = 3
        # eps_0 / 2 + eps_1 + eps_2 at t_2 + 1/(2n)
        assert evaluate(w, 2 / n + 1 / (2 * n)) == 2.5
        w = partial_sum_process([3.0, 1.0, 2.0, 5.0, 1.0], 1.0, zero_index=2)
        np.testing.assert_array_equal(w.values, [-2, -1.5, -1, 0, 1, 3.5, 6, 6.5, 7])

    @given(st.lists(st.floats(-10, 10), min_size=2, max_size=30), st.data())
    def test_vanishes_at_zero(self, eps, data):
        j = data.draw(st.integers(0, len(eps) - 1))
        w = partial_sum_process(eps, 1.7, n=len(eps), zero_index=j)
        if w.interval.contains(0.0):
            assert evaluate(w, 0.0) == 0.0

    def test_donsker_variance(self):
        n = 10 ** 4
        vals = [evaluate(partial_sum_process(np.random.default_rng(i).standard_normal(2 * n),
                                             math.sqrt(n), n=n, zero_index=n), 1.0 - 0.5 / n)
                for i in range(300)]
        assert abs(np.var(vals) - 1) < 0.2

    def test_bad_sigma(self):
        with pytest.raises(DomainError):
            partial_sum_process([1.0, 2.0], 0.0)
        with pytest.raises(DomainError):
            partial_sum_process([1.0], 1.0)


class TestLocalEmpirical:
    def test_zero_at_origin(self):
        s = np.random.default_rng(0).exponential(size=50)
        w = local_empirical_process(s, 0.5, 0.2, expon.cdf)
        assert evaluate(w, 0.0) == 0.0

    def test_hand_value(self):
        # sample {0.2, 0.55, 0.9}, t0 = 0.5, delta = 0.1, F(t) = t on [0, 1]
        cdf = lambda t: np.clip(t, 0.0, 1.0)
        w = local_empirical_process([0.2, 0.55, 0.9], 0.5, 0.1, cdf, s_max=2.0, m=401, sigma=1.0)
        # s = 1: #{t_i <= 0.6} - #{t_i <= 0.5} - 3 (0.6 - 0.5) = 1 - 0.3
        assert evaluate(w, 1.0) == pytest.approx(0.7, abs=1e-12)
        # s = -1: 1 - 1 - 3 (0.4 - 0.5) = 0.3
        assert evaluate(w, -1.0) == pytest.approx(0.3, abs=1e-12)

    def test_unit_variance(self):
        n, t0, delta = 10 ** 4, 0.5, 10 ** 4 ** (-1 / 3)
        vals = [evaluate(local_empirical_process(np.random.default_rng(i).exponential(size=n),
                                                 t0, delta, expon.cdf, s_max=1.0, m=201), 1.0)
                for i in range(200)]
        assert abs(np.var(vals) - 1) < 0.1 * 2   # 200 reps: sd of the variance is about 0.1

    def test_degenerate(self):
        with pytest.raises(DomainError):
            local_empirical_process([1.0], -5.0, 0.1, expon.cdf)


class TestSmoothedDisturbance:
    def test_constant(self):
        w = GridFunction(Interval(-3.0, 3.0), np.full(6 * 64 + 1, 2.5))
        v = smoothed_disturbance(w, EPA, 1.3)
        np.testing.assert_allclose(v.values, 0.0, atol=1e-13)
        assert v.interval == Interval(-2.0, 2.0)

    def test_linear_ramp(self):
        # c * int (s - u) k'(u) du = -c * int u k'(u) du = c
        w = sample(lambda s: s, Interval(-3.0, 3.0), 6 * 64 + 1)
        v = smoothed_disturbance(w, EPA, 2.0)
        fine = convolution_loop(w.nodes, w.values, EPA.deriv, 2.0, v.nodes[::32], 1 / 640)
        np.testing.assert_allclose(fine, 2.0, atol=1e-4)
        np.testing.assert_allclose(v.values[::32], fine, atol=1e-3)

    def test_brownian_against_loop(self):
        w = driving_path("brownian", 0.5, 3.0, 1 / 32, np.random.default_rng(4))
        v = smoothed_disturbance(w, EPA, 0.7)
        np.testing.assert_allclose(
            v.values, convolution_loop(w.nodes, w.values, EPA.deriv, 0.7, v.nodes, 1 / 32), atol=1e-8)

    def test_unaligned_step(self):
        w = driving_path("brownian", 0.5, 3.0, 0.03, np.random.default_rng(4))
        v = smoothed_disturbance(w, EPA, 1.0)
        ref = convolution_loop(w.nodes, w.values, EPA.deriv, 1.0, v.nodes, 1 / 34)
        np.testing.assert_allclose(v.values, ref, atol=1e-8)

    def test_too_narrow(self):
        with pytest.raises(ShapeError):
            smoothed_disturbance(GridFunction(Interval(-1.0, 1.0), np.zeros(65)), EPA, 1.0)


class TestDrivingPath:
    @pytest.mark.parametrize("process,beta", [("brownian", 0.5), ("fbm", 0.75)])
    def test_variance_scaling(self, process, beta):
        vals = np.array([driving_path(process, beta, 2.0, 1 / 64, np.random.default_rng(i)).values
                         for i in range(400)])
        assert np.all(vals[:, 128] == 0)
        for idx, s in ((192, 1.0), (0, -2.0)):
            assert abs(vals[:, idx].var() / abs(s) ** (2 * beta) - 1) < 0.2


class TestLimitDraw:
    def test_no_noise_returns_delta(self):
        p = LimitParams(A=-1.5, Delta=0.3, c=0.0)
        assert limit_draw(p, EPA, 1) == 0.3

    def test_symmetric_kernel_mean_zero(self):
        d, dropped = limit_draws(LimitParams(A=-2.0, c=1.0), EPA, 600, 11)
        assert dropped == 0
        assert abs(d.mean()) < 4 * d.std() / math.sqrt(d.size)

    def test_fixture_quantiles(self):
        fx = json.loads(FIXTURE.read_text())
        p = LimitParams(A=fx["A"], c=fx["c"], process=fx["process"])
        d, dropped = limit_draws(p, get_kernel(fx["kernel"]), fx["draws"], fx["master_seed"])
        assert dropped == fx["dropped"]
        np.testing.assert_array_equal(np.quantile(d, fx["probs"]),
                                      [float.fromhex(q) for q in fx["quantiles"]])

    def test_reproducible(self):
        p = LimitParams(A=-1.0, c=1.0, process="fbm", beta=0.8)
        a, _ = limit_draws(p, EPA, 20, 5)
        b, _ = limit_draws(p, EPA, 20, 5)
        np.testing.assert_array_equal(a, b)

    def test_scale_consistency(self):
        p = LimitParams(A=-1.0, c=1.0)
        for i in range(20):
            y = limit_process(p, EPA, np.random.default_rng(i), 16.0)
            for win in (8.0, 16.0):
                try:
                    base = rearranged_at_zero(y, window_for(p, win))
                except PreconditionError:
                    continue
                y2 = y.with_values(2 * y.values)
                w2 = window_for(LimitParams(A=-2.0, c=2.0), win)
                assert rearranged_at_zero(y2, w2) == 2 * base
                break

    def test_window_stability(self):
        small = LimitParams(A=-1.0, c=1.0, window=8.0)
        large = LimitParams(A=-1.0, c=1.0, window=12.0)
        half = max(widest_window(small), widest_window(large)) + 1.0
        agree = failed = 0
        for i in range(1000):
            w = driving_path("brownian", 0.5, half, small.grid_step,
                             np.random.default_rng(replication_seed(31, i)))
            try:
                a, b = draw_from_path(small, EPA, w), draw_from_path(large, EPA, w)
            except SimulationError:
                failed += 1
                continue
            agree += abs(a - b) <= 2 * small.grid_step
        assert failed <= 10
        assert agree >= 0.99 * 1000

    def test_symmetry(self):
        d, _ = limit_draws(LimitParams(A=-1.0, Delta=0.25, c=1.0), EPA, 2000, 99)
        x = d - 0.25
        assert ks_distance(x, -x) <= 0.05

    def test_resolution_stability(self):
        coarse = LimitParams(A=-1.0, c=1.0, grid_step=1 / 256)
        fine = LimitParams(A=-1.0, c=1.0, grid_step=1 / 512)
        a, _ = limit_draws(coarse, EPA, 1500, 1)
        b, _ = limit_draws(fine, EPA, 1500, 2)
        # two-sample KS 1% critical value at 1500 + 1500 is about 0.06
        assert ks_distance(a, b) <= 0.06

    def test_exhausted_expansions(self):
        # huge noise against a flat slope: no window passes
        p = LimitParams(A=-1e-3, c=50.0, max_expansions=1)
        with pytest.raises(SimulationError):
            limit_draw(p, EPA, 0)
        d, dropped = limit_draws(p, EPA, 3, 0)
        assert dropped == 3 and d.size == 0
