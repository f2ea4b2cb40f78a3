"""Laguerre/Hermite polynomials and zeros, I_nu, and the potentials F and F~."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.linalg import eigh_tridiagonal

from .errors import DomainError, InvalidInputError, NumericError

_TINY_GAP = 1e-300


class ZeroFamily(enum.Enum):
    LAGUERRE = "laguerre"
    HERMITE = "hermite"
    SQRT_LAGUERRE = "sqrt-laguerre"


@dataclass(frozen=True)
class ZeroSet:
    values: np.ndarray
    family: ZeroFamily
    n: int
    alpha: float | None = None

    def __len__(self):
        return len(self.values)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


@dataclass(frozen=True)
class PotentialValue:
    value: float
    gradient: np.ndarray


@dataclass(frozen=True)
class RootIdentityReport:
    sum_ok: bool
    logsum_ok: bool
    logpair_ok: bool
    sum_residual: float
    logsum_residual: float
    logpair_residual: float

    @property
    def ok(self):
        return self.sum_ok and self.logsum_ok and self.logpair_ok


def _check_alpha(alpha):
    if not alpha > -1:
        raise InvalidInputError(f"Laguerre parameter must exceed -1, got {alpha}")


def laguerre_all(n_max, alpha, x):
    """Array with L_0 .. L_{n_max} of parameter alpha at x, stacked on axis 0."""
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = 1.0 + alpha - x
    for k in range(2, n_max + 1):
        out[k] = ((2 * k + alpha - 1 - x) * out[k - 1] - (k + alpha - 1) * out[k - 2]) / k
    return out


def laguerre_eval(N, alpha, x):
    """L_N^(alpha)(x) by the three-term recurrence."""
    N = int(N)
    if N < 0:
        raise InvalidInputError(f"degree must be nonnegative, got {N}")
    _check_alpha(alpha)
    val = laguerre_all(N, alpha, x)[N]
    return val[()] if np.ndim(val) == 0 else val


def _hermite_pair(N, x):
    """(H_N(x), H_{N-1}(x)) for physicists' Hermite polynomials."""
    h_prev = np.zeros_like(x)
    h = np.ones_like(x)
    for k in range(N):
        h_prev, h = h, 2 * x * h - 2 * k * h_prev
    return h, h_prev


def laguerre_zeros(N, alpha):
    """Zeros of L_N^(alpha), ascending, by Golub-Welsch plus one Newton step."""
    N = int(N)
    if N < 1:
        raise InvalidInputError(f"need N >= 1, got {N}")
    _check_alpha(alpha)
    k = np.arange(N)
    diag = 2 * k + alpha + 1
    off = np.sqrt(k[1:] * (k[1:] + alpha))
    s = eigh_tridiagonal(diag, off, eigvals_only=True)

    def resid(v):
        L = laguerre_all(N, alpha, v)
        deriv = (N * L[N] - (N + alpha) * L[N - 1]) / v
        return L[N], deriv

    val, der = resid(s)
    polished = s - val / der
    pval, pder = resid(polished)
    better = np.abs(pval) < np.abs(val)
    s = np.where(better, polished, s)
    val = np.where(better, pval, val)
    der = np.where(better, pder, der)
    s = np.sort(s)
    bad = np.abs(val) > 1e-10 * np.abs(der) * np.abs(s)
    if np.any(bad) or np.any(s <= 0) or np.any(np.diff(s) <= 0):
        raise NumericError(
            f"Laguerre zero finder did not converge for N={N}, alpha={alpha}: "
            f"worst scaled residual {np.max(np.abs(val) / (np.abs(der) * np.abs(s))):.3e}"
        )
    return ZeroSet(values=s, family=ZeroFamily.LAGUERRE, n=N, alpha=float(alpha))


def sqrt_laguerre_zeros(N, alpha):
    z = laguerre_zeros(N, alpha)
    return ZeroSet(values=np.sqrt(z.values), family=ZeroFamily.SQRT_LAGUERRE, n=z.n, alpha=z.alpha)


def hermite_zeros(N):
    """Zeros of the physicists' Hermite polynomial H_N, ascending and symmetric."""
    N = int(N)
    if N < 1:
        raise InvalidInputError(f"need N >= 1, got {N}")
    off = np.sqrt(np.arange(1, N) / 2.0)
    s = eigh_tridiagonal(np.zeros(N), off, eigvals_only=True)
    h, h1 = _hermite_pair(N, s)
    der = 2 * N * h1
    polished = s - h / der
    ph, ph1 = _hermite_pair(N, polished)
    s = np.where(np.abs(ph) < np.abs(h), polished, s)
    s = np.sort(s)
    s = 0.5 * (s - s[::-1])
    h, h1 = _hermite_pair(N, s)
    scale = np.maximum(np.abs(s), 1.0)
    if np.any(np.abs(h) > 1e-10 * np.abs(2 * N * h1) * scale) or np.any(np.diff(s) <= 0):
        raise NumericError(f"Hermite zero finder did not converge for N={N}")
    return ZeroSet(values=s, family=ZeroFamily.HERMITE, n=N)


def log_modified_bessel_I(nu, x):
    """log I_nu(x) for x >= 0, stable for large x."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("modified Bessel function requires x >= 0")
    with np.errstate(divide="ignore"):
        out = np.log(special.ive(nu, x)) + x
    return out[()] if out.ndim == 0 else out


def modified_bessel_I(nu, x):
    """I_nu(x), nu >= -1/2, x >= 0; raises NumericError on overflow."""
    if nu < -0.5:
        raise InvalidInputError(f"order must be >= -1/2, got {nu}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("modified Bessel function requires x >= 0")
    if np.any(x > 20):
        with np.errstate(over="ignore"):
            out = special.ive(nu, x) * np.exp(x)
    else:
        out = special.iv(nu, x)
    if not np.all(np.isfinite(out)):
        raise NumericError(f"I_{nu}(x) overflows double precision at x={np.max(x)}")
    return out[()] if out.ndim == 0 else out


def bessel_tpd_single(t, y, x, nu):
    """Transition density of one Bessel process of index nu from x to y in time t."""
    if not t > 0:
        raise InvalidInputError(f"t must be positive, got {t}")
    if nu < -0.5:
        raise InvalidInputError(f"order must be >= -1/2, got {nu}")
    y = np.asarray(y, dtype=float)
    x = float(x)
    with np.errstate(divide="ignore"):
        logy = np.log(y)
    if x == 0.0:
        logp = (2 * nu + 1) * logy - y * y / (2 * t) - nu * math.log(2) - math.lgamma(nu + 1) - (nu + 1) * math.log(t)
    else:
        z = x * y / t
        logp = (nu + 1) * logy - nu * math.log(x) - math.log(t) - (x * x + y * y) / (2 * t) + log_modified_bessel_I(nu, z)
    out = np.where(y > 0, np.exp(logp), 0.0)
    return out[()] if out.ndim == 0 else out


def _pair_differences(z):
    z2 = z * z
    diff = z2[..., None, :] - z2[..., :, None]  # [i, j] = z_j^2 - z_i^2
    return z2, diff


def _check_distinct(diff, N):
    iu = np.triu_indices(N, 1)
    if np.any(np.abs(diff[..., iu[0], iu[1]]) < _TINY_GAP):
        raise DomainError("coincident squared coordinates")


def _f_constant(nu, N):
    i = np.arange(1, N + 1)
    a = nu + i - 0.5
    with np.errstate(divide="ignore", invalid="ignore"):
        alog = np.where(a > 0, a * np.log(np.where(a > 0, a, 1.0)), 0.0)
    return -N * (N + nu - 0.5) + np.sum(i * np.log(i)) + np.sum(alog)


def potential_F(z, nu, N=None):
    """F(z, nu, N) and its analytic gradient; invariant under W_B."""
    z = np.asarray(z, dtype=float)
    N = z.shape[-1] if N is None else int(N)
    if z.shape[-1] != N:
        raise InvalidInputError(f"expected {N} coordinates, got {z.shape[-1]}")
    if np.any(z == 0):
        raise DomainError("potential F undefined at a zero coordinate")
    z2, diff = _pair_differences(z)
    _check_distinct(diff, N)
    iu = np.triu_indices(N, 1)
    pair_logs = np.log(np.abs(diff[..., iu[0], iu[1]])).sum(axis=-1)
    value = (z2.sum(axis=-1) - (nu + 0.5) * np.log(z2).sum(axis=-1) - 2 * pair_logs + _f_constant(nu, N))
    with np.errstate(divide="ignore"):
        inv = np.where(np.eye(N, dtype=bool), 0.0, 1.0 / np.where(np.eye(N, dtype=bool), 1.0, -diff))
    # inv[i, j] = 1/(z_i^2 - z_j^2)
    grad = 2 * z - (2 * nu + 1) / z - 4 * z * inv.sum(axis=-1)
    return PotentialValue(value=value[()] if np.ndim(value) == 0 else value, gradient=grad)


def potential_F_hessian(z, nu):
    """Analytic Hessian of F at a single point z."""
    z = np.asarray(z, dtype=float)
    N = z.shape[-1]
    z2, diff = _pair_differences(z)
    _check_distinct(diff, N)
    eye = np.eye(N, dtype=bool)
    d2 = np.where(eye, 1.0, diff) ** 2
    H = np.where(eye, 0.0, -8 * np.outer(z, z) / d2)
    pair = np.where(eye, 0.0, 4 * (z2[:, None] + z2[None, :]) / d2).sum(axis=1)
    H[np.diag_indices(N)] = 2 + (2 * nu + 1) / z2 + pair
    return H


def potential_F_tilde(z, beta, N=None):
    """F~(z, beta, N) = z^2 - beta sum log z_i^2 + beta N (log beta - 1) and gradient."""
    z = np.asarray(z, dtype=float)
    N = z.shape[-1] if N is None else int(N)
    if z.shape[-1] != N:
        raise InvalidInputError(f"expected {N} coordinates, got {z.shape[-1]}")
    if not beta > 0:
        raise InvalidInputError(f"beta must be positive, got {beta}")
    if np.any(z == 0):
        raise DomainError("potential F~ undefined at a zero coordinate")
    z2 = z * z
    value = z2.sum(axis=-1) - beta * np.log(z2).sum(axis=-1) + beta * N * (math.log(beta) - 1)
    grad = 2 * z - 2 * beta / z
    return PotentialValue(value=value[()] if np.ndim(value) == 0 else value, gradient=grad)


def stationarity_residual(z, nu):
    """z_i^2 - (nu + 1/2) - sum_{j != i} 2 z_i^2/(z_i^2 - z_j^2)."""
    z = np.asarray(z, dtype=float)
    N = z.shape[-1]
    z2, diff = _pair_differences(z)
    _check_distinct(diff, N)
    eye = np.eye(N, dtype=bool)
    inv = np.where(eye, 0.0, 1.0 / np.where(eye, 1.0, -diff))
    return z2 - (nu + 0.5) - 2 * z2 * inv.sum(axis=-1)


def root_identities(N, alpha):
    """Check the sum, log-sum and pairwise log-sum identities of Laguerre zeros."""
    s = laguerre_zeros(N, alpha).values
    i = np.arange(1, N + 1)
    tol = 1e-8 * N
    r_sum = float(s.sum() - N * (alpha + N))
    r_log = float(np.log(s).sum() - np.log(alpha + i).sum())
    iu = np.triu_indices(N, 1)
    lhs = 2 * np.log(np.abs(s[iu[1]] - s[iu[0]])).sum()
    rhs = np.sum((i - 1) * np.log(alpha + i) + i * np.log(i))
    r_pair = float(lhs - rhs)
    return RootIdentityReport(
        sum_ok=abs(r_sum) <= tol,
        logsum_ok=abs(r_log) <= tol,
        logpair_ok=abs(r_pair) <= tol,
        sum_residual=r_sum,
        logsum_residual=r_log,
        logpair_residual=r_pair,
    )
