import itertools
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from scipy import integrate

from ibessel.dunkl import (
    Compact,
    HypergeoKind,
    ModelParams,
    PowerLaw,
    Regime,
    SeriesControl,
    frozen_vA_monomial,
    frozen_vB_monomial,
    gen_bessel_B,
    hypergeo_pFq,
    kernel_bound_check,
    kernel_E_beta_limit,
    kernel_E_nu_limit,
    log_selberg_cB,
    relaxation_time_estimate,
    selberg_cB,
    symmetrized_exp_expansion,
    tpd_radial_B,
    vA_on_monomial,
    vB_on_monomial,
    weight_wB,
)
from ibessel.errors import DomainError, InvalidInputError, NumericError, TruncationWarning
from ibessel.symfunc import Partition, jack_matrix, partitions_up_to


def signed_perms(N):
    for perm in itertools.permutations(range(N)):
        for signs in itertools.product([-1.0, 1.0], repeat=N):
            yield perm, np.array(signs)


class TestParams:
    def test_derived(self):
        p = ModelParams(4.0, 1.5, 3)
        assert p.alpha() == 1.0
        assert p.k1 == 4.0
        assert p.k2 == 2.0
        assert p.jack_alpha == 0.5

    @pytest.mark.parametrize("args", [(0.0, 0.5, 2), (1.0, -0.6, 2), (1.0, 0.5, 0), (1.0, 0.5, 1.5)])
    def test_invalid(self, args):
        with pytest.raises(InvalidInputError):
            ModelParams(*args)

    def test_series_control_capacity(self):
        with pytest.raises(InvalidInputError):
            SeriesControl(max_degree=31)


class TestWeight:
    def test_examples(self):
        assert weight_wB([0.0, 1.0], ModelParams(2.0, 0.5, 2)) == 0.0
        assert weight_wB([2.0], ModelParams(2.0, 0.5, 1)) == pytest.approx(4.0)

    def test_invariance(self):
        p = ModelParams(3.0, 0.7, 3)
        x = np.array([0.3, 1.2, 2.0])
        ref = weight_wB(x, p)
        for perm, signs in signed_perms(3):
            assert weight_wB(x[list(perm)] * signs, p) == pytest.approx(ref, rel=1e-13)


class TestSelberg:
    def test_one_particle_closed_form(self):
        assert selberg_cB(ModelParams(2.0, 0.5, 1)) == pytest.approx(2 ** 1.5 * math.gamma(1.5), rel=1e-14)

    @pytest.mark.parametrize("beta,nu", [(2.0, 0.5), (1.0, -0.5), (5.0, 3.0)])
    def test_one_particle_quadrature(self, beta, nu):
        p = ModelParams(beta, nu, 1)
        val, _ = integrate.quad(lambda x: math.exp(-x * x / 2) * abs(x) ** (beta * (nu + 0.5)), -np.inf, np.inf)
        assert selberg_cB(p) == pytest.approx(val, rel=1e-8)

    def test_two_particles_monte_carlo(self):
        p = ModelParams(2.0, 0.5, 2)
        rng = np.random.default_rng(11)
        x = rng.standard_normal((1_000_000, 2))
        est = 2 * math.pi * weight_wB(x, p).mean()
        assert selberg_cB(p) == pytest.approx(est, rel=0.03)

    def test_large_parameters_log_space(self):
        lc = log_selberg_cB(ModelParams(64.0, 10.0, 20))
        assert math.isfinite(lc) and lc > 709
        with pytest.raises(NumericError):
            selberg_cB(ModelParams(64.0, 10.0, 20))

    def test_log_matches_direct(self):
        p = ModelParams(2.0, 1.0, 3)
        assert math.log(selberg_cB(p)) == pytest.approx(log_selberg_cB(p), rel=1e-14)


class TestHypergeometric:
    def test_zero_argument(self):
        for kind in HypergeoKind:
            assert hypergeo_pFq(kind, 1.7, [0.0, 0.0], [1.0, 2.0], 0.8) == pytest.approx(1.0)

    @pytest.mark.parametrize("x,y", [(1.0, 3.0), (-1.5, 2.0), (0.3, 0.4)])
    def test_f00_one_variable_is_exponential(self, x, y):
        ctrl = SeriesControl(max_degree=30)
        assert hypergeo_pFq(HypergeoKind.F00, None, [x], [y], 1.3, ctrl) == pytest.approx(math.exp(x * y), rel=1e-12)
        assert ctrl.converged

    @pytest.mark.parametrize("beta", [1.0, 2.0, 8.0])
    def test_f00_with_constant_argument(self, beta):
        a = 0.4
        z = np.array([0.3, 0.9, 1.4])
        val = hypergeo_pFq(HypergeoKind.F00, None, z, a * np.ones(3), 2.0 / beta, SeriesControl(max_degree=25))
        assert val == pytest.approx(math.exp(a * z.sum()), rel=1e-11)

    @pytest.mark.parametrize("alpha", [0.5, 0.9, 3.0])
    def test_f11_one_variable_is_0f1(self, alpha):
        from scipy.special import hyp0f1

        # with one variable the hook ratio and (1/alpha)_n combine to 1/n!
        b = 2.3
        val = hypergeo_pFq(HypergeoKind.F11, b, [1.2], [0.7], alpha, SeriesControl(max_degree=30))
        assert val == pytest.approx(hyp0f1(b, 1.2 * 0.7), rel=1e-13)

    def test_truncation_warning_and_flag(self):
        ctrl = SeriesControl(max_degree=3)
        with pytest.warns(TruncationWarning):
            hypergeo_pFq(HypergeoKind.F00, None, [3.0, 4.0], [2.0, 5.0], 1.0, ctrl)
        assert not ctrl.converged
        assert ctrl.last_term_ratio > ctrl.rel_term_tol
        assert ctrl.degree_reached == 3


class TestGenBessel:
    def test_zero_argument(self):
        p = ModelParams(2.0, 0.5, 3)
        assert gen_bessel_B([0.3, 0.5, 0.9], [0.0, 0.0, 0.0], p) == pytest.approx(48.0)

    def test_symmetric(self):
        p = ModelParams(3.0, 1.5, 2)
        assert gen_bessel_B([0.3, 1.1], [0.7, 0.2], p) == pytest.approx(gen_bessel_B([0.7, 0.2], [0.3, 1.1], p), rel=1e-13)

    @pytest.mark.parametrize("nu", [0.0, 0.5, 2.0])
    def test_one_particle_bessel_function(self, nu):
        from scipy.special import iv

        p = ModelParams(2.0, nu, 1)
        b = p.bessel_b
        x, y = 0.9, 1.7
        ref = 2 * math.gamma(b) * (x * y / 2) ** (1 - b) * iv(b - 1, x * y)
        assert gen_bessel_B([x], [y], p, SeriesControl(max_degree=30)) == pytest.approx(ref, rel=1e-12)

    def test_wb_invariance(self):
        p = ModelParams(2.0, 0.5, 2)
        x = np.array([0.4, 0.9])
        y = np.array([0.5, 1.3])
        ref = gen_bessel_B(x, y, p)
        for perm, signs in signed_perms(2):
            assert gen_bessel_B(x[list(perm)] * signs, y, p) == pytest.approx(ref, rel=1e-13)


class TestSymmetrizedExp:
    def test_degree_zero(self):
        assert symmetrized_exp_expansion([0.3, 0.4], [1.0, 2.0], 0) == pytest.approx(8.0, rel=1e-15)

    def test_one_variable_cosh(self):
        x, y = 0.8, 1.1
        val = symmetrized_exp_expansion([x], [y], 14)
        ref = sum(2 * (x * y) ** (2 * k) / math.factorial(2 * k) for k in range(8))
        assert val == pytest.approx(ref, rel=1e-14)

    @pytest.mark.parametrize("N", [1, 2, 3])
    def test_group_enumeration(self, N):
        rng = np.random.default_rng(N)
        x = rng.uniform(-0.5, 0.5, N)
        y = rng.uniform(-0.5, 0.5, N)
        brute = sum(math.exp(float(x @ (y[list(perm)] * signs))) for perm, signs in signed_perms(N))
        assert symmetrized_exp_expansion(x, y, 15) == pytest.approx(brute, rel=1e-10)

    def test_degree_cap(self):
        with pytest.raises(InvalidInputError):
            symmetrized_exp_expansion([1.0], [1.0], 16)


class TestIntertwiner:
    def test_vb_constant(self):
        e = vB_on_monomial(Partition(()), ModelParams(2.0, 0.5, 3))
        assert e.evaluate([0.3, 0.2, 0.9]) == pytest.approx(1.0)

    def test_vb_degree_one_against_series(self):
        # N = 1, lam = (1): the expansion term is (2/2!) y^2 V_B m_1(x^2) and the
        # series term is 2 (x^2/2)(y^2/2)/b
        p = ModelParams(3.0, 0.25, 1)
        x, y = 0.6, 0.8
        e = vB_on_monomial(Partition((1,)), p)
        lhs = y ** 2 * e.evaluate([x * x])
        ref = 2 * (x * x / 2) * (y * y / 2) / p.bessel_b
        assert lhs == pytest.approx(ref, rel=1e-13)

    def test_va_degree_one(self):
        e = vA_on_monomial(Partition((1,)), 2.0, 4)
        assert e.coeffs == pytest.approx({Partition((1,)): 1.0})

    def test_va_constant(self):
        assert vA_on_monomial(Partition(()), 5.0, 2).evaluate([0.3, 0.7]) == pytest.approx(1.0)

    def test_too_long(self):
        with pytest.raises(InvalidInputError):
            vB_on_monomial(Partition((1, 1, 1)), ModelParams(2.0, 0.5, 2))

    def test_vb_frozen_rate(self):
        x = np.array([0.4, 0.9])
        for lam in [Partition((1,)), Partition((2,)), Partition((1, 1)), Partition((2, 1))]:
            gaps = []
            for beta in (1e2, 1e3, 1e4, 1e5):
                p = ModelParams(beta, 0.5, 2)
                val = beta ** sum(lam) * vB_on_monomial(lam, p).evaluate(x * x)
                lim = frozen_vB_monomial(lam, x, 0.5, 2)
                gaps.append(abs(val - lim) / abs(lim))
            assert all(a > b for a, b in zip(gaps, gaps[1:]))

    def test_vb_large_nu_limit(self):
        beta, nu = 2.0, 1e6
        x = np.array([0.5, 0.8, 1.3])
        for n in range(1, 4):
            for lam in partitions_up_to(n, 3):
                p = ModelParams(beta, nu, 3)
                lhs = nu ** n * vB_on_monomial(lam, p).evaluate(x * x)
                fac = math.prod(math.factorial(2 * q) / math.factorial(q) for q in lam)
                rhs = fac * vA_on_monomial(lam, beta, 3).evaluate(x * x / (2 * beta))
                assert lhs == pytest.approx(rhs, rel=1e-3)

    def test_va_frozen_limit(self):
        u = np.array([0.2, 0.5, 1.1])
        lam = Partition((2, 1))
        val = vA_on_monomial(lam, 1e7, 3).evaluate(u)
        assert val == pytest.approx(frozen_vA_monomial(lam, u, 3), rel=1e-5)


class TestKernels:
    def test_beta_limit_examples(self):
        p = ModelParams(2.0, 0.5, 1)
        assert kernel_E_beta_limit([1.0], [1.0], p) == pytest.approx(math.exp(0.5))
        assert kernel_E_beta_limit([0.0, 0.0], [1.0, 2.0], ModelParams(2.0, 0.5, 2)) == 1.0

    def test_beta_limit_against_series(self):
        beta = 1e6
        p = ModelParams(beta, 0.5, 2)
        x, y = np.array([0.3, 0.7]), np.array([0.5, 0.9])
        val = gen_bessel_B(math.sqrt(beta) * x, y, p) / 8
        assert val == pytest.approx(kernel_E_beta_limit(x, y, p), rel=1e-3)

    def test_nu_limit_against_series(self):
        nu = 1e6
        p = ModelParams(2.0, nu, 2)
        x, y = np.array([0.3, 0.7]), np.array([0.5, 0.9])
        val = gen_bessel_B(math.sqrt(nu) * x, y, p) / 8
        assert val == pytest.approx(kernel_E_nu_limit(x, y, 2.0), rel=1e-3)

    def test_nu_limit_zero(self):
        assert kernel_E_nu_limit([0.4, 0.1], [0.0, 0.0], 3.0) == pytest.approx(1.0)

    def test_bound_check(self):
        x, y = np.array([0.3, 0.4]), np.array([1.0, 0.0])
        assert not kernel_bound_check(x, y, 2.0, math.exp(2.0 * 0.5) * 1.01)
        assert kernel_bound_check(x, y, 2.0, math.exp(2.0 * 0.5) * 0.99)
        assert kernel_bound_check([0.0, 0.0], y, 2.0, 1.0)
        assert not kernel_bound_check([0.0, 0.0], y, 2.0, 1.0001)


class TestTPD:
    def test_zero_start(self):
        p = ModelParams(2.0, 0.5, 2)
        y = np.array([0.6, 1.4])
        t = 0.7
        ref = (
            weight_wB(y / math.sqrt(t), p) * math.exp(-np.sum(y * y) / (2 * t)) * 8 / (selberg_cB(p) * t)
        )
        assert tpd_radial_B(t, y, [0.0, 0.0], p) == pytest.approx(ref, rel=1e-13)

    @pytest.mark.parametrize("nu", [0.5, 2.0])
    def test_one_particle_matches_bessel(self, nu):
        from ibessel.orthopoly import bessel_tpd_single

        p = ModelParams(2.0, nu, 1)
        # one particle at beta = 2 is a Bessel process of index b - 1
        idx = p.bessel_b - 1
        for y in (0.3, 1.0, 2.5):
            assert tpd_radial_B(1.3, [y], [0.0], p) == pytest.approx(bessel_tpd_single(1.3, y, 0.0, idx), rel=1e-12)

    def test_normalized(self):
        p = ModelParams(2.0, 0.5, 2)
        x = np.array([0.1, 0.2])
        nodes, weights = np.polynomial.legendre.leggauss(80)
        R = 9.0
        r = (nodes + 1) * R / 2
        wr = weights * R / 2
        s = (nodes + 1) / 2
        ws = weights / 2
        rr, ss = np.meshgrid(r, s, indexing="ij")
        w = np.outer(wr, ws).ravel()
        y = np.stack([(rr * ss).ravel(), rr.ravel()], axis=-1)
        vals = tpd_radial_B(1.0, y, x, p) * y[:, 1]
        assert float(np.sum(w * vals)) == pytest.approx(1.0, abs=1e-3)

    def test_start_invariance(self):
        p = ModelParams(2.0, 0.5, 2)
        y = np.array([0.6, 1.4])
        x = np.array([0.2, 0.5])
        ref = tpd_radial_B(1.0, y, x, p)
        for perm, signs in signed_perms(2):
            assert tpd_radial_B(1.0, y, x[list(perm)] * signs, p) == ref

    def test_outside_chamber(self):
        with pytest.raises(DomainError):
            tpd_radial_B(1.0, [1.0, 0.5], [0.0, 0.0], ModelParams(2.0, 0.5, 2))


class TestRelaxation:
    def test_compact_examples(self):
        p = ModelParams(2.0, 0.5, 3)
        eps = 1 - 1e-12
        assert relaxation_time_estimate(p, Regime.LARGE_BETA, Compact(math.sqrt(14)), eps).t_min == pytest.approx(14.0)
        assert relaxation_time_estimate(p, Regime.LARGE_BETA, Compact(math.sqrt(0.014)), eps).t_min == pytest.approx(0.014)

    def test_power_law(self):
        p = ModelParams(2.0, 0.5, 7)
        est = relaxation_time_estimate(p, Regime.LARGE_BETA, PowerLaw(1.0), 0.5)
        assert est.t_min == pytest.approx(10 / (4 * 49 * 49))
        assert est.beta_or_nu_min == pytest.approx(10 / 7)
        est = relaxation_time_estimate(ModelParams(2.0, 100.0, 7), Regime.LARGE_NU, PowerLaw(1.0), 0.5)
        assert est.t_min == pytest.approx(10 / (4 * 1e4))
        assert est.beta_or_nu_min == pytest.approx(140.0)

    def test_eps_range(self):
        with pytest.raises(InvalidInputError):
            relaxation_time_estimate(ModelParams(2.0, 0.5, 3), Regime.LARGE_BETA, Compact(1.0), 1.0)


def test_jack_cache_is_thread_safe():
    def work(alpha):
        return jack_matrix(6, 3, alpha)[1].copy()

    alphas = [0.25, 0.5, 1.0, 2.0] * 4
    with ThreadPoolExecutor(max_workers=8) as pool:
        got = list(pool.map(work, alphas))
    for a, m in zip(alphas, got):
        assert np.array_equal(m, jack_matrix(6, 3, a)[1])
