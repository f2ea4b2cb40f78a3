import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from ibessel.errors import DomainError, InvalidInputError, NumericError
from ibessel.orthopoly import (
    ZeroFamily,
    bessel_tpd_single,
    hermite_zeros,
    laguerre_eval,
    laguerre_zeros,
    log_modified_bessel_I,
    modified_bessel_I,
    potential_F,
    potential_F_hessian,
    potential_F_tilde,
    root_identities,
    sqrt_laguerre_zeros,
    stationarity_residual,
)

ALPHAS = [-0.4, -0.25, 0.0, 0.5, 1.0, 3.0, 7.5]


def mp_laguerre(N, alpha, x):
    """L_N^(alpha)(x) and its derivative by the recurrence at 50 digits."""
    with mpmath.workdps(50):
        x = mpmath.mpf(x)
        a = mpmath.mpf(alpha)
        prev, cur = mpmath.mpf(0), mpmath.mpf(1)
        dprev, dcur = mpmath.mpf(0), mpmath.mpf(0)
        for k in range(1, N + 1):
            nxt = ((2 * k - 1 + a - x) * cur - (k - 1 + a) * prev) / k
            dnxt = ((2 * k - 1 + a - x) * dcur - cur - (k - 1 + a) * dprev) / k
            prev, cur, dprev, dcur = cur, nxt, dcur, dnxt
        return float(cur), float(dcur)


def signed_perm(rng, z):
    return rng.permutation(z) * rng.choice([-1.0, 1.0], size=z.size)


class TestLaguerre:
    def test_degree_zero(self):
        assert laguerre_eval(0, 1.3, 7.0) == 1.0

    def test_degree_one(self):
        assert laguerre_eval(1, 0.0, 1.0) == 0.0

    @pytest.mark.parametrize("N,alpha", [(3, 0.0), (5, 2.5), (7, -0.4)])
    def test_value_at_zero(self, N, alpha):
        ref = math.prod(alpha + i for i in range(1, N + 1)) / math.factorial(N)
        assert laguerre_eval(N, alpha, 0.0) == pytest.approx(ref, rel=1e-14)

    @pytest.mark.parametrize("N,alpha,x", [(4, 0.5, 2.3), (9, 3.0, 11.0), (12, -0.25, 0.7)])
    def test_against_mpmath(self, N, alpha, x):
        assert laguerre_eval(N, alpha, x) == pytest.approx(float(mpmath.laguerre(N, alpha, x)), rel=1e-11)

    def test_alpha_out_of_range(self):
        with pytest.raises(InvalidInputError):
            laguerre_zeros(3, -1.0)


class TestZeros:
    def test_examples(self):
        assert np.allclose(laguerre_zeros(1, 0.0).values, [1.0])
        assert np.allclose(laguerre_zeros(2, 0.0).values, [2 - math.sqrt(2), 2 + math.sqrt(2)], rtol=1e-14)
        assert laguerre_zeros(3, 0.0).values.sum() == pytest.approx(9.0, rel=1e-14)

    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_residual_bound(self, alpha):
        for N in range(1, 21):
            z = laguerre_zeros(N, alpha)
            assert z.family is ZeroFamily.LAGUERRE
            s = z.values
            assert len(z) == N
            assert np.all(s > 0) and np.all(np.diff(s) > 0)
            for si in s:
                val, deriv = mp_laguerre(N, alpha, si)
                assert abs(val) <= 1e-10 * abs(deriv) * si

    def test_sqrt_family(self):
        z = sqrt_laguerre_zeros(7, 0.0)
        assert z.family is ZeroFamily.SQRT_LAGUERRE
        assert np.sum(z.values ** 2) == pytest.approx(49.0, rel=1e-13)

    def test_hermite_examples(self):
        assert np.allclose(hermite_zeros(1).values, [0.0], atol=1e-15)
        assert np.allclose(hermite_zeros(2).values, [-1 / math.sqrt(2), 1 / math.sqrt(2)], rtol=1e-14)
        r = math.sqrt(1.5)
        assert np.allclose(hermite_zeros(3).values, [-r, 0.0, r], rtol=1e-14, atol=1e-15)

    @pytest.mark.parametrize("N", [4, 7, 12, 20])
    def test_hermite_roots_and_symmetry(self, N):
        z = hermite_zeros(N).values
        assert np.array_equal(z, -z[::-1])
        for zi in z:
            with mpmath.workdps(50):
                val = mpmath.hermite(N, mpmath.mpf(zi), zeroprec=200)
                deriv = 2 * N * mpmath.hermite(N - 1, mpmath.mpf(zi))
            assert abs(float(val)) <= 1e-10 * abs(float(deriv)) * max(1, abs(zi))


class TestBesselI:
    def test_examples(self):
        assert modified_bessel_I(0.0, 0.0) == 1.0
        assert modified_bessel_I(1.0, 0.0) == 0.0
        assert modified_bessel_I(0.5, 1.0) == pytest.approx(math.sqrt(2 / math.pi) * math.sinh(1.0), rel=1e-14)

    @pytest.mark.parametrize("nu", [-0.5, 0.0, 0.5, 2.25, 7.0])
    def test_against_mpmath(self, nu):
        for x in np.linspace(0.01, 50.0, 41):
            assert modified_bessel_I(nu, x) == pytest.approx(float(mpmath.besseli(nu, x)), rel=1e-10)

    def test_log_large_argument(self):
        ref = float(mpmath.log(mpmath.besseli(3.0, 2000.0)))
        assert log_modified_bessel_I(3.0, 2000.0) == pytest.approx(ref, rel=1e-12)

    def test_overflow(self):
        with pytest.raises(NumericError):
            modified_bessel_I(0.0, 1000.0)


class TestBesselTPD:
    def test_closed_form(self):
        ref = math.exp(-1.0) * math.sqrt(2 / math.pi) * math.sinh(1.0)
        assert bessel_tpd_single(1.0, 1.0, 1.0, 0.5) == pytest.approx(ref, rel=1e-13)

    @pytest.mark.parametrize("t,x,nu", [(1.0, 1.0, 0.0), (0.5, 2.0, 0.5), (2.0, 0.0, 1.5), (1.0, 3.0, 4.0), (0.1, 0.2, -0.5)])
    def test_normalized(self, t, x, nu):
        val, _ = integrate.quad(lambda y: bessel_tpd_single(t, y, x, nu), 0, np.inf, limit=200)
        assert val == pytest.approx(1.0, abs=1e-6)

    def test_vanishes_at_origin(self):
        assert bessel_tpd_single(1.0, 1e-8, 1.0, 0.5) < 1e-12


class TestPotentials:
    @pytest.mark.parametrize("N", [1, 3, 7])
    @pytest.mark.parametrize("alpha", [-0.4, 0.0, 2.5])
    def test_minimum_is_zero(self, N, alpha):
        z = sqrt_laguerre_zeros(N, alpha).values
        pv = potential_F(z, alpha + 0.5, N)
        assert abs(pv.value) <= 1e-8
        assert np.max(np.abs(pv.gradient)) <= 1e-8
        assert np.max(np.abs(stationarity_residual(z, alpha + 0.5))) <= 1e-8

    def test_stationarity_single(self):
        assert abs(stationarity_residual(np.array([math.sqrt(1.7)]), 1.2)[0]) < 1e-14

    def test_stationarity_detects_perturbation(self):
        z = sqrt_laguerre_zeros(4, 0.0).values + 0.1
        assert np.max(np.abs(stationarity_residual(z, 0.5))) > 1e-3

    def test_wb_invariance(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            z = np.sort(rng.uniform(0.2, 3.0, size=4))
            assert potential_F(signed_perm(rng, z), 1.1, 4).value == pytest.approx(potential_F(z, 1.1, 4).value, rel=1e-12)

    def test_gradient_finite_difference(self):
        rng = np.random.default_rng(6)
        h = 1e-6
        for _ in range(50):
            z = np.sort(rng.uniform(0.2, 3.0, size=3)) + np.array([0.0, 0.05, 0.1])
            g = potential_F(z, 0.8, 3).gradient
            gt = potential_F_tilde(z, 2.5, 3).gradient
            for i in range(3):
                e = np.zeros(3)
                e[i] = h
                fd = (potential_F(z + e, 0.8, 3).value - potential_F(z - e, 0.8, 3).value) / (2 * h)
                fdt = (potential_F_tilde(z + e, 2.5, 3).value - potential_F_tilde(z - e, 2.5, 3).value) / (2 * h)
                assert fd == pytest.approx(g[i], rel=1e-5, abs=1e-6)
                assert fdt == pytest.approx(gt[i], rel=1e-5, abs=1e-6)

    @given(st.lists(st.floats(min_value=0.05, max_value=5.0), min_size=3, max_size=3, unique=True),
           st.lists(st.floats(min_value=-1.0, max_value=1.0), min_size=3, max_size=3))
    @settings(max_examples=100, deadline=None)
    def test_hessian_positive(self, z, u):
        z = np.sort(np.array(z))
        if np.min(np.diff(z ** 2)) < 1e-6:
            return
        u = np.array(u)
        H = potential_F_hessian(z, 0.5)
        assert u @ H @ u >= -1e-10 * max(1.0, np.abs(H).max())

    def test_coincident_coordinates(self):
        with pytest.raises(DomainError):
            potential_F(np.array([1.0, 1.0]), 0.5, 2)
        with pytest.raises(DomainError):
            potential_F(np.array([0.0, 1.0]), 0.5, 2)

    def test_tilde_examples(self):
        for beta in (0.5, 2.0, 64.0):
            pv = potential_F_tilde(math.sqrt(beta) * np.ones(4), beta, 4)
            assert abs(pv.value) < 1e-12 * max(1, beta)
            assert np.max(np.abs(pv.gradient)) < 1e-12 * max(1, beta)
        assert potential_F_tilde(np.array([math.exp(0.5)]), 1.0, 1).value == pytest.approx(math.e - 2, rel=1e-14)

    def test_tilde_zero_coordinate(self):
        with pytest.raises(DomainError):
            potential_F_tilde(np.array([0.0, 1.0]), 1.0, 2)


class TestRootIdentities:
    def test_examples(self):
        assert root_identities(1, 0.0).ok
        assert root_identities(5, 2.5).ok

    @pytest.mark.parametrize("N,alpha", [(2, 0.0), (10, 7.5), (20, -0.4)])
    def test_residuals_small(self, N, alpha):
        rep = root_identities(N, alpha)
        assert rep.ok
        assert rep.sum_residual <= 1e-8 * N
