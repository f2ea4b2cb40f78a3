"""Type-B Dunkl machinery: weights, Selberg constant, hypergeometric series,
generalized Bessel function, intertwining operators and their limits.

Series are summed in log space with explicit signs, so arguments that would
overflow a direct sum (large beta, many particles) still give finite logs.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, InvalidInputError, NumericError, TruncationWarning
from .symfunc import (
    MAX_DEGREE,
    Partition,
    cell_table,
    jack_matrix,
    jack_values,
    monomial_values,
    multinomial_M,
    partitions_up_to,
)

C_PARAM = 10.0
C_TIME = 10.0


@dataclass(frozen=True)
class ModelParams:
    """(beta, nu, N) with beta > 0, nu >= -1/2, N >= 1."""

    beta: float
    nu: float
    n_particles: int

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise InvalidInputError(f"beta must be positive and finite, got {self.beta}")
        if not (self.nu >= -0.5 and math.isfinite(self.nu)):
            raise InvalidInputError(f"nu must be >= -1/2, got {self.nu}")
        if int(self.n_particles) != self.n_particles or self.n_particles < 1:
            raise InvalidInputError(f"n_particles must be a positive integer, got {self.n_particles}")
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "nu", float(self.nu))
        object.__setattr__(self, "n_particles", int(self.n_particles))

    @property
    def N(self):
        return self.n_particles

    def alpha(self):
        """Laguerre parameter nu - 1/2."""
        return self.nu - 0.5

    @property
    def k1(self):
        return self.beta * (self.nu + 0.5) / 2

    @property
    def k2(self):
        return self.beta / 2

    @property
    def jack_alpha(self):
        return 2.0 / self.beta

    @property
    def bessel_b(self):
        """First parameter of the 1F1 in the generalized Bessel function."""
        return self.beta * (self.nu + self.n_particles - 0.5) / 2 + 0.5


@dataclass
class SeriesControl:
    max_degree: int = 20
    rel_term_tol: float = 1e-12
    last_term_ratio: float = float("nan")
    converged: bool = False
    degree_reached: int = 0

    def __post_init__(self):
        if not 0 <= self.max_degree <= MAX_DEGREE:
            raise InvalidInputError(f"max_degree must lie in [0, {MAX_DEGREE}], got {self.max_degree}")
        if not self.rel_term_tol > 0:
            raise InvalidInputError("rel_term_tol must be positive")


@dataclass
class JackExpansion:
    """sum_tau coeffs[tau] * P_tau^(alpha)(z)."""

    coeffs: dict = field(default_factory=dict)
    alpha: float = 1.0
    degree: int = 0

    def __post_init__(self):
        for key in self.coeffs:
            if sum(key) != self.degree:
                raise InvalidInputError(f"key {key} has modulus {sum(key)} != degree {self.degree}")

    def evaluate(self, z):
        z = np.asarray(z, dtype=float)
        flat = np.atleast_2d(z)
        N = flat.shape[-1]
        parts, _ = jack_matrix(self.degree, N, self.alpha)
        vals = jack_values(self.degree, self.alpha, flat.reshape(-1, N))
        c = np.array([self.coeffs.get(p, 0.0) for p in parts])
        out = (vals @ c).reshape(z.shape[:-1])
        return out[()] if out.ndim == 0 else out


class HypergeoKind(enum.Enum):
    F00 = "F00"
    F11 = "F11"


@dataclass(frozen=True)
class SeriesResult:
    sign: np.ndarray
    log_abs: np.ndarray
    last_term_ratio: np.ndarray
    degree_reached: int

    @property
    def value(self):
        with np.errstate(over="ignore"):
            v = self.sign * np.exp(self.log_abs)
        return v


def _signed_logsumexp(logs, signs, axis):
    logs = np.asarray(logs, dtype=float)
    finite = np.isfinite(logs) & (signs != 0)
    m = np.max(np.where(finite, logs, -np.inf), axis=axis, keepdims=True)
    m_safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(under="ignore"):
        s = np.sum(np.where(finite, signs * np.exp(np.where(finite, logs, 0.0) - m_safe), 0.0), axis=axis)
    m = np.squeeze(m_safe, axis=axis)
    with np.errstate(divide="ignore"):
        return np.sign(s), np.log(np.abs(s)) + m


def _log_coefficients(kind, b, n, N, alpha):
    """log|coef_tau| and sign for each tau of degree n: c/(c' (N/alpha)_tau [(b)_tau])."""
    if n == 0:
        return np.zeros(1), np.ones(1)
    i, j, a, l, starts = cell_table(n, N)
    f = (
        np.log(alpha * a + l + 1)
        - np.log(alpha * (a + 1) + l)
        + math.log(alpha)
        - np.log(N - i + 1 + alpha * (j - 1))
    )
    sign = np.ones(len(starts))
    if kind is HypergeoKind.F11:
        g = b - (i - 1) / alpha + j - 1
        if np.any(g == 0):
            raise DomainError(f"generalized Pochhammer pole at b={b}, alpha={alpha}, degree {n}")
        f = f - np.log(np.abs(g))
        neg = np.add.reduceat((g < 0).astype(np.int64), starts) % 2
        sign = np.where(neg == 1, -1.0, 1.0)
    return np.add.reduceat(f, starts), sign


def _broadcast_points(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != y.shape[-1]:
        raise InvalidInputError(f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}")
    shape = np.broadcast_shapes(x.shape, y.shape)
    N = shape[-1]
    return x, y, shape[:-1], N


def _log_jack(n, alpha, pts, batch_shape):
    N = pts.shape[-1]
    flat = pts.reshape(-1, N)
    P = jack_values(n, alpha, flat)
    with np.errstate(divide="ignore"):
        lp = np.log(np.abs(P))
    sp = np.sign(P)
    lead = pts.shape[:-1]
    lp = lp.reshape(lead + (-1,))
    sp = sp.reshape(lead + (-1,))
    lp = np.broadcast_to(lp, batch_shape + lp.shape[-1:])
    sp = np.broadcast_to(sp, batch_shape + sp.shape[-1:])
    return lp, sp


def hypergeo_series(kind, b, x, y, alpha, max_degree=20, rel_term_tol=1e-12, early_stop=True):
    """Truncated 0F0/1F1 of two vector arguments; returns a SeriesResult.

    Summation stops early once two consecutive degree blocks fall below
    ``rel_term_tol`` relative to the running sum at every batch point.
    """
    kind = HypergeoKind(kind)
    alpha = float(alpha)
    if not alpha > 0:
        raise InvalidInputError(f"alpha must be positive, got {alpha}")
    if not 0 <= max_degree <= MAX_DEGREE:
        raise InvalidInputError(f"max_degree must lie in [0, {MAX_DEGREE}]")
    x, y, batch, N = _broadcast_points(x, y)
    total_sign = np.ones(batch)
    total_log = np.zeros(batch)
    ratio = np.zeros(batch)
    small_run = np.zeros(batch, dtype=np.int64)
    reached = 0
    for n in range(1, max_degree + 1):
        logc, sc = _log_coefficients(kind, b, n, N, alpha)
        lx, sx = _log_jack(n, alpha, x, batch)
        ly, sy = _log_jack(n, alpha, y, batch)
        bs, bl = _signed_logsumexp(logc + lx + ly, sc * sx * sy, axis=-1)
        total_sign, total_log = _signed_logsumexp(
            np.stack([total_log, bl], axis=-1), np.stack([total_sign, bs], axis=-1), axis=-1
        )
        with np.errstate(over="ignore", invalid="ignore"):
            ratio = np.where(bs == 0, 0.0, np.exp(bl - total_log))
        small_run = np.where(ratio <= rel_term_tol, small_run + 1, 0)
        reached = n
        if early_stop and np.all(small_run >= 2):
            break
    return SeriesResult(sign=total_sign, log_abs=total_log, last_term_ratio=ratio, degree_reached=reached)


def _record(ctrl, res):
    worst = float(np.max(res.last_term_ratio)) if np.size(res.last_term_ratio) else 0.0
    ctrl.last_term_ratio = worst
    ctrl.degree_reached = res.degree_reached
    ctrl.converged = worst <= ctrl.rel_term_tol
    if not ctrl.converged:
        warnings.warn(
            f"series truncated at degree {res.degree_reached} with last term ratio {worst:.3e}",
            TruncationWarning,
            stacklevel=3,
        )


def _scalarize(a):
    a = np.asarray(a)
    return a[()] if a.ndim == 0 else a


def hypergeo_pFq(kind, b, x, y, alpha, ctrl=None):
    """Truncated generalized hypergeometric function of two vector arguments.

    ``kind`` is "F00" (``b`` unused) or "F11". Convergence diagnostics are
    written into ``ctrl``.
    """
    ctrl = SeriesControl() if ctrl is None else ctrl
    res = hypergeo_series(kind, b, x, y, alpha, ctrl.max_degree, ctrl.rel_term_tol)
    _record(ctrl, res)
    return _scalarize(res.value)


def hypergeo_degree_terms(kind, b, x, y, alpha, max_degree):
    """Sum of the degree-n terms for n = 0..max_degree, without early stopping."""
    kind = HypergeoKind(kind)
    x, y, batch, N = _broadcast_points(x, y)
    out = [np.ones(batch)]
    for n in range(1, max_degree + 1):
        logc, sc = _log_coefficients(kind, b, n, N, float(alpha))
        lx, sx = _log_jack(n, alpha, x, batch)
        ly, sy = _log_jack(n, alpha, y, batch)
        bs, bl = _signed_logsumexp(logc + lx + ly, sc * sx * sy, axis=-1)
        out.append(bs * np.exp(bl))
    return np.stack(out, axis=-1)


def _check_dim(v, params, name):
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != params.n_particles:
        raise InvalidInputError(f"{name} has {v.shape[-1]} coordinates, expected N={params.n_particles}")
    return v


def log_gen_bessel_B(x, y, params, ctrl=None):
    """(sign, log|.|) of the type-B generalized Bessel function."""
    ctrl = SeriesControl() if ctrl is None else ctrl
    x = _check_dim(x, params, "x")
    y = _check_dim(y, params, "y")
    N = params.n_particles
    res = hypergeo_series(
        HypergeoKind.F11, params.bessel_b, x * x / 2, y * y / 2, params.jack_alpha, ctrl.max_degree, ctrl.rel_term_tol
    )
    _record(ctrl, res)
    const = N * math.log(2) + math.lgamma(N + 1)
    return _scalarize(res.sign), _scalarize(res.log_abs + const)


def gen_bessel_B(x, y, params, ctrl=None):
    """sum over W_B of V_B exp(x . rho y) = 2^N N! 1F1(b; x^2/2, y^2/2)."""
    s, lg = log_gen_bessel_B(x, y, params, ctrl)
    with np.errstate(over="ignore"):
        return _scalarize(s * np.exp(lg))


def symmetrized_exp_expansion(x, y, max_degree):
    """W_B-symmetrized exponential expanded in even monomials up to total degree max_degree."""
    if not 0 <= max_degree <= 15:
        raise InvalidInputError(f"max_degree must lie in [0, 15], got {max_degree}")
    x, y, batch, N = _broadcast_points(x, y)
    X = np.broadcast_to(x, batch + (N,)).reshape(-1, N) ** 2
    Y = np.broadcast_to(y, batch + (N,)).reshape(-1, N) ** 2
    lead = math.log(2) * N + math.lgamma(N + 1)
    total = np.zeros(X.shape[0])
    for n in range(0, max_degree // 2 + 1):
        parts = partitions_up_to(n, N)
        w = np.array(
            [math.exp(lead - sum(math.lgamma(2 * p + 1) for p in mu)) / multinomial_M(mu, N) for mu in parts]
        )
        total += (monomial_values(n, X) * monomial_values(n, Y)) @ w
    return _scalarize(total.reshape(batch))


def _factorial_of_parts(lam, doubled=False):
    return math.exp(sum(math.lgamma((2 if doubled else 1) * p + 1) for p in lam))


def vB_on_monomial(lam, params):
    """Jack-basis expansion of V_B m_lam[(x)^2]; evaluate it at z = (x)^2."""
    lam = Partition(lam)
    N = params.n_particles
    if len(lam) > N:
        raise InvalidInputError(f"partition {tuple(lam)} longer than N={N}")
    n = sum(lam)
    alpha = params.jack_alpha
    parts, U = jack_matrix(n, N, alpha)
    col = U[:, parts.index(lam)]
    logc, sc = _log_coefficients(HypergeoKind.F11, params.bessel_b, n, N, alpha)
    pref = _factorial_of_parts(lam, doubled=True) * multinomial_M(lam, N) / 4.0 ** n
    coeffs = {}
    for t, tau in enumerate(parts):
        if col[t] != 0:
            coeffs[tau] = float(pref * col[t] * sc[t] * math.exp(logc[t]))
    return JackExpansion(coeffs=coeffs, alpha=alpha, degree=n)


def vA_on_monomial(lam, beta, N):
    """Jack-basis expansion of the type-A intertwiner applied to m_lam."""
    lam = Partition(lam)
    N = int(N)
    if len(lam) > N:
        raise InvalidInputError(f"partition {tuple(lam)} longer than N={N}")
    if not beta > 0:
        raise InvalidInputError(f"beta must be positive, got {beta}")
    n = sum(lam)
    alpha = 2.0 / beta
    parts, U = jack_matrix(n, N, alpha)
    col = U[:, parts.index(lam)]
    logc, _ = _log_coefficients(HypergeoKind.F00, None, n, N, alpha)
    pref = _factorial_of_parts(lam) * multinomial_M(lam, N)
    coeffs = {tau: float(pref * col[t] * math.exp(logc[t])) for t, tau in enumerate(parts) if col[t] != 0}
    return JackExpansion(coeffs=coeffs, alpha=alpha, degree=n)


def frozen_vB_monomial(lam, x, nu, N):
    """beta -> infinity limit of beta^|lam| V_B m_lam[(x)^2], evaluated at x."""
    lam = Partition(lam)
    n = sum(lam)
    x = np.asarray(x, dtype=float)
    coef = (
        _factorial_of_parts(lam, doubled=True)
        * multinomial_M(lam, N)
        / (2.0 ** n * _factorial_of_parts(lam) * N ** n * (nu + N - 0.5) ** n)
    )
    return coef * np.sum(x * x, axis=-1) ** n


def frozen_vA_monomial(lam, u, N):
    """beta -> infinity limit of V_A m_lam(u)."""
    lam = Partition(lam)
    n = sum(lam)
    u = np.asarray(u, dtype=float)
    return multinomial_M(lam, N) / N ** n * np.sum(u, axis=-1) ** n


def weight_wB(x, params):
    """prod |x_i|^(beta(nu+1/2)) prod_{i<j} |x_j^2 - x_i^2|^beta."""
    s = log_weight_wB(x, params)
    return _scalarize(np.exp(s))


def log_weight_wB(x, params):
    x = _check_dim(x, params, "x")
    N = params.n_particles
    k1 = params.beta * (params.nu + 0.5)
    out = np.zeros(x.shape[:-1])
    with np.errstate(divide="ignore"):
        if k1 != 0:
            out = out + k1 * np.log(np.abs(x)).sum(axis=-1)
        if N > 1:
            x2 = x * x
            iu = np.triu_indices(N, 1)
            out = out + params.beta * np.log(np.abs(x2[..., iu[1]] - x2[..., iu[0]])).sum(axis=-1)
    return _scalarize(out)


def log_selberg_cB(params):
    """log of the integral of w_B(x) exp(-x^2/2) over R^N."""
    b, nu, N = params.beta, params.nu, params.n_particles
    j = np.arange(1, N + 1)
    args = np.concatenate([1 + j * b / 2, b * (nu + j - 0.5) / 2 + 0.5])
    if np.any(args <= 0):
        raise DomainError(f"Gamma pole in Selberg constant for {params}")
    expo = N * (b * (nu + 0.5) + 1) / 2 + b * N * (N - 1) / 2
    return float(expo * math.log(2) + gammaln(args).sum() - N * math.lgamma(b / 2 + 1))


def selberg_cB(params):
    lc = log_selberg_cB(params)
    if lc > 709:
        raise NumericError(f"Selberg constant overflows double precision (log = {lc:.3f}); use log_selberg_cB")
    return math.exp(lc)


def in_chamber_B(y):
    y = np.asarray(y, dtype=float)
    return np.all(y[..., :1] > 0, axis=-1) & np.all(np.diff(y, axis=-1) > 0, axis=-1)


def log_tpd_radial_B(t, y, x, params, ctrl=None):
    if not t > 0:
        raise InvalidInputError(f"t must be positive, got {t}")
    y = _check_dim(y, params, "y")
    x = _check_dim(x, params, "x")
    if not np.all(in_chamber_B(y)):
        raise DomainError("y must lie in the open type-B chamber 0 < y_1 < ... < y_N")
    # only (x)^2 enters, so any W_B image of a chamber point is accepted
    N = params.n_particles
    rt = math.sqrt(t)
    sgn, lk = log_gen_bessel_B(x / rt, y / rt, params, ctrl)
    if np.any(np.asarray(sgn) <= 0):
        raise NumericError("generalized Bessel series returned a nonpositive value")
    out = (
        log_weight_wB(y / rt, params)
        - (np.sum(y * y, axis=-1) + np.sum(x * x, axis=-1)) / (2 * t)
        - log_selberg_cB(params)
        - N / 2 * math.log(t)
        + lk
    )
    return _scalarize(out)


def tpd_radial_B(t, y, x, params, ctrl=None):
    """Transition density of the interacting Bessel processes on the type-B chamber."""
    return _scalarize(np.exp(log_tpd_radial_B(t, y, x, params, ctrl)))


def log_kernel_E_beta_limit(x, y, params):
    N = params.n_particles
    g = N + params.alpha()
    if not g > 0:
        raise DomainError("N + nu - 1/2 must be positive for the beta-limit kernel")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return _scalarize(np.sum(x * x, axis=-1) * np.sum(y * y, axis=-1) / (2 * N * g))


def kernel_E_beta_limit(x, y, params):
    """exp(x^2 y^2 / (2 N (N + alpha))) with squared Euclidean norms."""
    lg = log_kernel_E_beta_limit(x, y, params)
    if np.any(np.asarray(lg) > 709):
        raise NumericError("beta-limit kernel overflows; use log_kernel_E_beta_limit")
    return _scalarize(np.exp(lg))


def kernel_E_nu_limit(x, y, beta, ctrl=None):
    """0F0^(2/beta)((x)^2/sqrt(2 beta), (y)^2/sqrt(2 beta))."""
    if not beta > 0:
        raise InvalidInputError(f"beta must be positive, got {beta}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = math.sqrt(2 * beta)
    return hypergeo_pFq(HypergeoKind.F00, None, x * x / s, y * y / s, 2.0 / beta, ctrl)


def kernel_bound_check(x, y, scale, value):
    """True iff |value| <= exp(scale * |x| * |y|)."""
    bound = scale * float(np.linalg.norm(x)) * float(np.linalg.norm(y))
    v = abs(float(value))
    if v == 0:
        return True
    return math.log(v) <= bound


class Regime(enum.Enum):
    LARGE_BETA = "large-beta"
    LARGE_NU = "large-nu"


@dataclass(frozen=True)
class PowerLaw:
    eta: float


@dataclass(frozen=True)
class Compact:
    r_mu: float


@dataclass(frozen=True)
class RelaxationEstimate:
    t_min: float
    beta_or_nu_min: float


def relaxation_time_estimate(params, regime, tail, eps):
    """Minimal time and parameter floor for the steady-state approximations."""
    regime = Regime(regime)
    if not 0 < eps < 1:
        raise InvalidInputError(f"eps must lie in (0, 1), got {eps}")
    N = params.n_particles
    beta = params.beta
    if regime is Regime.LARGE_BETA:
        g = N + params.alpha()
        if not g > 0:
            raise DomainError("N + nu - 1/2 must be positive")
        floor = C_PARAM / g
        power_t = C_TIME / (beta ** 2 * N ** 2 * g ** 2)
    else:
        if params.nu <= 0:
            raise DomainError("large-nu estimate needs nu > 0")
        floor = C_PARAM * beta * N
        power_t = C_TIME / (beta ** 2 * params.nu ** 2)
    if isinstance(tail, Compact):
        t_min = tail.r_mu ** 2 / eps ** 2
    elif isinstance(tail, PowerLaw):
        if not tail.eta > 0:
            raise InvalidInputError("power-law exponent must be positive")
        t_min = power_t
    else:
        raise InvalidInputError(f"unknown tail model {tail!r}")
    return RelaxationEstimate(t_min=float(t_min), beta_or_nu_min=float(floor))
