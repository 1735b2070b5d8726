import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dualaqd.exceptions import ConfigurationError
from dualaqd.losses import (QdHyperparams, coverage_indicator, coverage_penalty, dualaqd_loss,
                            mpiw_capt, mpiw_pen, mse_loss, picp, qd_loss, qdplus_loss, soft_picp)
from oracles import central_diff, grad_rel_err

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


def _batch(rng, n=12, spread=1.0):
    y = rng.normal(size=n)
    y_hat = y + 0.3 * rng.normal(size=n)
    y_u = y + spread * np.abs(rng.normal(size=n)) + 0.05
    y_l = y - spread * np.abs(rng.normal(size=n)) - 0.05
    return y, y_hat, y_u, y_l


def _fd_pair(fun, y_u, y_l):
    gu = central_diff(lambda v: fun(v, y_l), y_u)
    gl = central_diff(lambda v: fun(y_u, v), y_l)
    return gu, gl


class TestMse:
    def test_examples(self):
        assert mse_loss([1.0, 2.0], [1.0, 2.0])[0] == 0.0
        assert mse_loss([1.0, 3.0], [0.0, 0.0])[0] == 5.0

    def test_gradient(self, rng):
        y_hat, y = rng.normal(size=9), rng.normal(size=9)
        _, g = mse_loss(y_hat, y)
        assert grad_rel_err(g, central_diff(lambda v: mse_loss(v, y)[0], y_hat)) <= 1e-6

    def test_empty_and_ragged(self):
        with pytest.raises(ConfigurationError):
            mse_loss([], [])
        with pytest.raises(ConfigurationError):
            mse_loss([1.0], [1.0, 2.0])


class TestCoverage:
    @pytest.mark.parametrize("args, expected", [
        ((1.0, 2.0, 2.5, 3.0), 1),
        ((0.1, 25.0, 24.0, 0.2), 0),
        ((1.0, 1.0, 2.0, 3.0), 0),
        ((1.0, 2.0, 3.0, 3.0), 0),
    ])
    def test_indicator(self, args, expected):
        assert coverage_indicator(*args) == expected

    def test_picp(self):
        assert picp(np.ones(7)) == 1.0
        assert picp(np.zeros(7)) == 0.0
        assert picp([1] * 19 + [0]) == 0.95

    def test_mpiw_capt(self):
        assert mpiw_capt([5.0, 6.0], [1.0, 2.0], [0, 0]) == 0.0
        assert mpiw_capt([3.0], [1.0], [1]) == pytest.approx(2.0, rel=1e-7)
        assert mpiw_capt([3.0, 5.0], [1.0, 1.0], [1, 1]) == pytest.approx(3.0, rel=1e-7)


class TestMpiwPen:
    def test_degenerate_bounds_example(self):
        v, _, _ = mpiw_pen([0.2], [24.0], [0.1])
        assert v == pytest.approx(47.7, abs=1e-12)

    def test_zero_when_bounds_equal_target(self):
        y = np.array([1.0, -2.0, 3.0])
        assert mpiw_pen(y, y, y)[0] == 0.0

    def test_symmetric_unit_bounds(self):
        y = np.array([0.0, 5.0])
        assert mpiw_pen(y + 1, y, y - 1)[0] == 2.0

    def test_subgradients(self, rng):
        y, _, y_u, y_l = _batch(rng)
        y_u[0] = y[0] - 0.5  # upper bound below target
        _, gu, gl = mpiw_pen(y_u, y, y_l)
        fu, fl = _fd_pair(lambda u, l: mpiw_pen(u, y, l)[0], y_u, y_l)
        assert grad_rel_err(gu, fu) <= 1e-6
        assert grad_rel_err(gl, fl) <= 1e-6


class TestCoveragePenalty:
    def test_zero_exponents(self):
        terms, _, _ = coverage_penalty([1.0, 0.0], [0.0, 0.0], [1.0, 1.0], [-1.0, -1.0])
        assert (terms.xi, terms.d_u, terms.d_l) == (1.0, 1.0, 1.0)
        assert terms.c == 2.0

    def test_two_e(self):
        terms, _, _ = coverage_penalty([1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0])
        assert terms.c == pytest.approx(2 * math.e, rel=1e-12)
        assert terms.c == pytest.approx(5.43656, abs=1e-5)

    def test_asymmetric_distances(self):
        terms, _, _ = coverage_penalty([0.5], [0.0], [2.0], [-1.0])
        assert (terms.xi, terms.d_u, terms.d_l) == (0.5, 2.0, 1.0)
        assert terms.c == pytest.approx(math.exp(-1.5) + math.exp(-0.5), rel=1e-12)
        assert terms.c == pytest.approx(0.82966, abs=1e-5)

    def test_gradient(self, rng):
        y, y_hat, y_u, y_l = _batch(rng)
        _, gu, gl = coverage_penalty(y_hat, y, y_u, y_l)
        fu, fl = _fd_pair(lambda u, l: coverage_penalty(y_hat, y, u, l)[0].c, y_u, y_l)
        assert grad_rel_err(gu, fu) <= 1e-6
        assert grad_rel_err(gl, fl) <= 1e-6

    def test_clipped_exponent_keeps_direction(self):
        terms, gu, gl = coverage_penalty([0.0], [0.0], [-100.0], [100.0])
        assert np.isfinite(terms.c)
        assert gu[0] < 0 < gl[0]

    def test_positive_and_decreasing(self):
        d = np.linspace(-3, 3, 61)
        cs = [coverage_penalty([0.4], [0.0], [v], [-v])[0].c for v in d]
        assert all(c > 0 for c in cs)
        assert np.all(np.diff(cs) < 0)

    @given(st.floats(0, 5), st.floats(-5, -1e-3), st.floats(-5, 5))
    def test_integrity_violation_exceeds_exp_xi(self, xi, du, dl):
        terms, _, _ = coverage_penalty([xi], [0.0], [du], [-dl])
        assert terms.c > math.exp(xi) >= 1.0


class TestDualAqd:
    def test_lambda_zero_is_pen_only(self, rng):
        y, y_hat, y_u, y_l = _batch(rng)
        terms, _, _ = dualaqd_loss(y, y_hat, y_u, y_l, 0.0)
        assert terms.total == mpiw_pen(y_u, y, y_l)[0]

    def test_perfect_tight_interval(self):
        y = np.array([1.0, 2.0, 3.0])
        terms, _, _ = dualaqd_loss(y, y, y, y, 0.7)
        assert terms.xi == 0.0 and terms.d_u == 0.0 and terms.d_l == 0.0
        assert terms.total == pytest.approx(1.4, rel=1e-15)

    def test_total_identity(self, rng):
        terms, _, _ = dualaqd_loss(*_batch(rng), 2.5)
        assert terms.xi >= 0
        assert terms.total == terms.mpiw_pen + terms.lam * terms.c

    def test_negative_lambda(self, rng):
        with pytest.raises(ConfigurationError):
            dualaqd_loss(*_batch(rng), -0.1)

    def test_gradients_on_random_batches(self):
        rng = np.random.default_rng(77)
        for _ in range(100):
            y, y_hat, y_u, y_l = _batch(rng, n=int(rng.integers(1, 10)))
            lam = float(rng.uniform(0, 3))
            _, gu, gl = dualaqd_loss(y, y_hat, y_u, y_l, lam)
            fu, fl = _fd_pair(lambda u, l: dualaqd_loss(y, y_hat, u, l, lam)[0].total, y_u, y_l)
            assert grad_rel_err(gu, fu) <= 1e-6
            assert grad_rel_err(gl, fl) <= 1e-6

    def test_permutation_invariant(self, rng):
        y, y_hat, y_u, y_l = _batch(rng, n=20)
        p = rng.permutation(20)
        a, gu, gl = dualaqd_loss(y, y_hat, y_u, y_l, 1.3)
        b, gu2, gl2 = dualaqd_loss(y[p], y_hat[p], y_u[p], y_l[p], 1.3)
        assert a.total == pytest.approx(b.total, rel=1e-14)
        np.testing.assert_allclose(gu[p], gu2, rtol=1e-14)
        np.testing.assert_allclose(gl[p], gl2, rtol=1e-14)


@settings(max_examples=200)
@given(arrays(np.float64, 6, elements=finite), arrays(np.float64, 6, elements=st.floats(0, 10)),
       arrays(np.float64, 6, elements=st.floats(0, 10)))
def test_pen_equals_width_under_coverage(y, up, down):
    y_u, y_l = y + up, y - down
    pen = mpiw_pen(y_u, y, y_l)[0]
    assert pen == pytest.approx(np.mean(y_u - y_l), rel=1e-12, abs=1e-12)


@given(arrays(np.float64, 6, elements=finite), st.floats(0.01, 10))
def test_pen_exceeds_width_when_a_target_escapes(y, w):
    y_u, y_l = y + w, y - w
    y_u[0] = y[0] - 0.5
    y_l[0] = y_u[0] - 1.0
    assert mpiw_pen(y_u, y, y_l)[0] > np.mean(y_u - y_l)


class TestQd:
    def test_penalty_clamps_when_coverage_met(self):
        hp = QdHyperparams()
        y = np.zeros(10)
        v, _, _ = qd_loss(y, y + 1.0, y - 1.0, hp)
        assert soft_picp(y, y + 1.0, y - 1.0, hp.soften_s)[0] > 0.95
        assert v == mpiw_capt(y + 1.0, y - 1.0, np.ones(10))

    def test_far_outside_limit(self):
        hp = QdHyperparams(delta=0.02, tau=0.05, soften_s=1e4)
        v, _, _ = qd_loss([10.0], [1.0], [0.0], hp)
        expected = 0.02 * 1 / (0.05 * 0.95) * 0.95 ** 2
        assert v == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_gradient(self, seed):
        rng = np.random.default_rng(seed)
        hp = QdHyperparams(soften_s=5.0)
        y, _, y_u, y_l = _batch(rng, n=8, spread=0.3)
        y_u[:3] = y[:3] - 0.2  # some misses so the penalty is active
        _, gu, gl = qd_loss(y, y_u, y_l, hp)
        fu, fl = _fd_pair(lambda u, l: qd_loss(y, u, l, hp)[0], y_u, y_l)
        assert grad_rel_err(gu, fu) <= 1e-5
        assert grad_rel_err(gl, fl) <= 1e-5

    def test_hyperparameter_validation(self):
        with pytest.raises(ConfigurationError, match="tau.*lambda1"):
            QdHyperparams(tau=1.5, lambda1=2.0)


class TestQdPlus:
    def test_reduces_to_capt(self, rng):
        y, y_hat, y_u, y_l = _batch(rng)
        hp = QdHyperparams(lambda1=0.0, lambda2=0.0, xi_qd=0.0)
        v = qdplus_loss(y, y_hat, y_u, y_l, hp)[0]
        assert v == mpiw_capt(y_u, y_l, coverage_indicator(y_l, None, y, y_u))

    @pytest.mark.parametrize("hinge", ["violation", "printed"])
    def test_lambda2_one_is_mse_plus_hinge(self, rng, hinge):
        y, y_hat, y_u, y_l = _batch(rng)
        y_hat[0] = y_u[0] + 1.0
        hp = QdHyperparams(lambda2=1.0, xi_qd=0.5, hinge=hinge)
        if hinge == "violation":
            h = np.maximum(0, y_hat - y_u) + np.maximum(0, y_l - y_hat)
        else:
            h = np.maximum(0, y_u - y_hat) + np.maximum(0, y_hat - y_l)
        expected = np.mean((y_hat - y) ** 2) + 0.5 / y.size * h.sum()
        assert qdplus_loss(y, y_hat, y_u, y_l, hp)[0] == pytest.approx(expected, rel=1e-13)

    @pytest.mark.parametrize("hinge", ["violation", "printed"])
    @pytest.mark.parametrize("seed", range(5))
    def test_gradient(self, seed, hinge):
        rng = np.random.default_rng(100 + seed)
        hp = QdHyperparams(soften_s=5.0, hinge=hinge, xi_qd=0.7)
        y, y_hat, y_u, y_l = _batch(rng, n=8, spread=0.3)
        y_u[:2] = y[:2] - 0.2
        y_hat[2] = y_u[2] + 0.3
        _, gu, gl, gh = qdplus_loss(y, y_hat, y_u, y_l, hp)
        fu, fl = _fd_pair(lambda u, l: qdplus_loss(y, y_hat, u, l, hp)[0], y_u, y_l)
        fh = central_diff(lambda v: qdplus_loss(y, v, y_u, y_l, hp)[0], y_hat)
        assert grad_rel_err(gu, fu) <= 1e-5
        assert grad_rel_err(gl, fl) <= 1e-5
        assert grad_rel_err(gh, fh) <= 1e-5


@given(finite, finite, finite, st.floats(0, 10))
def test_crossed_interval_never_covers(y, y_hat, lo, gap):
    assert coverage_indicator(lo + gap, y_hat, y, lo) == 0
