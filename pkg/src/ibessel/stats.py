"""Histograms, exact and steady-state densities, peaks and distances."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, signal
from scipy.special import gammaln

from .dunkl import ModelParams, log_selberg_cB
from .errors import DomainError, InvalidInputError, NumericError
from .orthopoly import _f_constant, laguerre_all, potential_F, potential_F_hessian, potential_F_tilde

DEFAULT_BIN_WIDTH = 1e-2


@dataclass(frozen=True)
class Histogram:
    """Binned positions divided by ``scale_applied``.

    Bin k covers [origin + k*bin_width, origin + (k+1)*bin_width).
    ``mode`` is "pooled" (all N coordinates binned together) or "single".
    """

    bin_width: float
    origin: float
    counts: np.ndarray
    scale_applied: float
    n_samples: int
    n_particles: int = 1
    mode: str = "pooled"

    @property
    def centers(self):
        return self.origin + (np.arange(self.counts.size) + 0.5) * self.bin_width

    @property
    def n_values(self):
        return self.n_samples * (self.n_particles if self.mode == "pooled" else 1)

    def density(self):
        return self.counts / (self.n_values * self.bin_width)

    def rescaled(self, factor):
        return Histogram(
            self.bin_width, self.origin, self.counts * factor, self.scale_applied,
            self.n_samples * factor, self.n_particles, self.mode,
        )


def histogram(finals, bin_width=DEFAULT_BIN_WIDTH, scale=1.0, origin=None, column=None):
    """Pooled (or single-coordinate) histogram of ``finals / scale``.

    Rows containing NaN (stuck paths) are dropped. With ``origin=None`` the
    first bin edge is the largest multiple of ``bin_width`` not above the
    smallest value.
    """
    if not bin_width > 0:
        raise InvalidInputError(f"bin_width must be positive, got {bin_width}")
    if not scale > 0:
        raise InvalidInputError(f"scale must be positive, got {scale}")
    arr = np.asarray(finals, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    arr = arr[~np.isnan(arr).any(axis=1)]
    if arr.shape[0] == 0:
        raise InvalidInputError("empty ensemble")
    n_samples, n_particles = arr.shape
    if column is None:
        vals = arr.ravel() / scale
        mode = "pooled"
    else:
        vals = arr[:, column] / scale
        mode = "single"
    if origin is None:
        origin = math.floor(vals.min() / bin_width) * bin_width
    idx = np.floor((vals - origin) / bin_width).astype(np.int64)
    if idx.min() < 0:
        raise InvalidInputError("origin lies above the smallest sample")
    counts = np.bincount(idx)
    return Histogram(float(bin_width), float(origin), counts, float(scale), n_samples, n_particles, mode)


def format_float(v):
    return f"{v:.17g}"


def write_density_csv(path, xs, ys, header):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(header + "\n")
        for a, b in zip(xs, ys):
            fh.write(f"{format_float(float(a))},{format_float(float(b))}\n")


def write_histogram_csv(path, h):
    write_density_csv(path, h.centers, h.density(), "bin_center,density")


def read_density_csv(path):
    """(x, density, header) from a two-column CSV written by this package."""
    with open(path, encoding="ascii") as fh:
        header = fh.readline().strip()
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if header not in ("bin_center,density", "y,density"):
        raise InvalidInputError(f"unexpected CSV header {header!r} in {path}")
    data = np.array(rows, dtype=float).reshape(-1, 2)
    return data[:, 0], data[:, 1], header


def exact_density_beta2(y, t, N, nu):
    """One-point function of the beta=2 processes started at the origin; integrates to N."""
    if not t > 0:
        raise InvalidInputError(f"t must be positive, got {t}")
    if int(N) != N or N < 1:
        raise InvalidInputError(f"N must be a positive integer, got {N}")
    if nu <= -1:
        raise InvalidInputError(f"nu must exceed -1, got {nu}")
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise DomainError("y must be nonnegative")
    lam = y * y / (2 * t)
    L = laguerre_all(N + 1, nu, lam)
    bracket = N * L[N] ** 2 + L[N] * L[N - 1] - (N + 1) * L[N + 1] * L[N - 1]
    logpref = math.lgamma(N + 1) - math.lgamma(nu + N) + math.log(2) - nu * math.log(2 * t)
    with np.errstate(divide="ignore", invalid="ignore"):
        powy = np.where(y > 0, y ** (2 * nu - 1), 0.0 if 2 * nu - 1 > 0 else (1.0 if 2 * nu == 1 else np.inf))
    out = math.exp(logpref) * bracket * powy * np.exp(-lam)
    return out[()] if out.ndim == 0 else out


def pooled_density(f, scale, n_particles):
    """Density of v = y/scale for one particle chosen at random, from a one-point function f(y)."""

    def g(v):
        return scale * f(scale * np.asarray(v, dtype=float)) / n_particles

    return g


def _check_chamber(u):
    u = np.asarray(u, dtype=float)
    if not (np.all(u[..., 0] > 0) and np.all(np.diff(u, axis=-1) > 0)):
        raise DomainError("point must lie strictly inside 0 < u_1 < ... < u_N")
    return u


def log_steady_density_beta(u, params):
    u = _check_chamber(u)
    F = potential_F(u, params.nu, params.n_particles).value
    return -params.beta * F / 2 + params.n_particles / 2 * math.log(params.beta)


def steady_density_beta(u, params):
    """exp(-beta F(u, nu, N)/2) beta^(N/2); unnormalized, equals beta^(N/2) at its maximum."""
    return np.exp(log_steady_density_beta(u, params))


def _log_pair_sum(u2):
    N = u2.shape[-1]
    iu = np.triu_indices(N, 1)
    return np.log(np.abs(u2[..., iu[1]] - u2[..., iu[0]])).sum(axis=-1)


def log_steady_density_nu(u, params):
    u = _check_chamber(u)
    nu, beta, N = params.nu, params.beta, params.n_particles
    if not nu > 0:
        raise InvalidInputError("steady density in nu needs nu > 0")
    Ft = potential_F_tilde(u, beta, N).value
    pairs = N * (N - 1) / 2
    return -nu * Ft / 2 + N / 2 * math.log(nu) + beta * (pairs * math.log(nu) + _log_pair_sum(u * u))


def steady_density_nu(u, params):
    """exp(-nu F~(u, beta, N)/2) nu^(N/2) prod_{i<j} |nu (u_j^2 - u_i^2)|^beta; unnormalized."""
    return np.exp(log_steady_density_nu(u, params))


def laguerre_ensemble_exponent(params):
    return params.beta * (params.nu + 0.5 - 1 / params.beta) / 2


def log_laguerre_ensemble_density(lam, params):
    lam = _check_chamber(lam)
    a = laguerre_ensemble_exponent(params)
    return -lam.sum(axis=-1) / 2 + a * np.log(lam).sum(axis=-1) + params.beta * _log_pair_sum_linear(lam)


def _log_pair_sum_linear(v):
    N = v.shape[-1]
    iu = np.triu_indices(N, 1)
    return np.log(np.abs(v[..., iu[1]] - v[..., iu[0]])).sum(axis=-1)


def laguerre_ensemble_density(lam, params):
    """exp(-sum lam/2) prod lam^a prod |lam_j - lam_i|^beta, a = beta(nu + 1/2 - 1/beta)/2."""
    return np.exp(log_laguerre_ensemble_density(lam, params))


def steady_beta_log_normalizer_closed(params):
    """log of the integral of steady_density_beta over the chamber, via the Selberg integral."""
    b, nu, N = params.beta, params.nu, params.n_particles
    K = -_f_constant(nu, N)
    D = N * b * (nu + 0.5) + b * N * (N - 1)
    return float(
        N / 2 * math.log(b) + b * K / 2 + log_selberg_cB(params) - (D + N) / 2 * math.log(b)
        - N * math.log(2) - math.lgamma(N + 1)
    )


def _chamber_from_simplex(r, s):
    """u_N = r, u_k = u_{k+1} s_k; returns (u, log Jacobian)."""
    N = s.shape[-1] + 1
    u = np.empty(r.shape + (N,))
    u[..., N - 1] = r
    for k in range(N - 2, -1, -1):
        u[..., k] = u[..., k + 1] * s[..., k]
    with np.errstate(divide="ignore"):
        logJ = np.log(u[..., 1:]).sum(axis=-1)
    return u, logJ


@dataclass(frozen=True)
class NormalizerResult:
    log_z: float
    std_err_rel: float
    method: str


def _radial_cutoff(logf, mode, drop=60.0):
    """Radius along the mode direction beyond which log f fell by ``drop``."""
    top = logf(mode[None, :])[0]
    r = 1.0
    while r < 1e6:
        r *= 1.5
        if logf((mode * r)[None, :])[0] < top - drop:
            return float(np.max(mode) * r)
    raise NumericError("could not bracket the density tail")


def normalize_over_chamber(logf, N, mode, method="auto", rel_tol=1e-8, n_samples=200_000, seed=0):
    """Integral of exp(logf) over 0 < u_1 < ... < u_N.

    ``mode`` is a point near the maximum. For N <= 3 a tensor Gauss-Legendre
    rule in (r, s_1..s_{N-1}) coordinates is doubled until successive values
    agree to ``rel_tol``; for larger N importance sampling with independent
    scaled-chi proposals is used and its relative standard error reported.
    """
    mode = np.asarray(mode, dtype=float)
    if method == "auto":
        method = "quadrature" if N <= 3 else "importance"
    shift = float(logf(mode[None, :])[0])
    if method == "quadrature":
        R = _radial_cutoff(logf, mode)
        prev = None
        for n in (24, 48, 96, 192):
            nodes, weights = np.polynomial.legendre.leggauss(n)
            rx = (nodes + 1) * R / 2
            rw = weights * R / 2
            sx = (nodes + 1) / 2
            sw = weights / 2
            grids = np.meshgrid(*([rx] + [sx] * (N - 1)), indexing="ij")
            wgrids = np.meshgrid(*([rw] + [sw] * (N - 1)), indexing="ij")
            r = grids[0].ravel()
            s = np.stack([g.ravel() for g in grids[1:]], axis=-1) if N > 1 else np.empty((r.size, 0))
            w = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
            u, logJ = _chamber_from_simplex(r, s)
            ok = (u[:, 0] > 0) & np.all(np.diff(u, axis=1) > 0, axis=1)
            vals = np.zeros(r.size)
            vals[ok] = np.exp(logf(u[ok]) + logJ[ok] - shift)
            total = float(np.sum(w * vals))
            if prev is not None and abs(total - prev) <= rel_tol * abs(total):
                return NormalizerResult(math.log(total) + shift, abs(total - prev) / total, "quadrature")
            prev = total
        raise NumericError(f"chamber quadrature did not reach rel_tol={rel_tol} (last change {abs(total - prev) / total:.2e})")
    if method != "importance":
        raise InvalidInputError(f"unknown method {method!r}")
    rng = np.random.default_rng(seed)
    m2 = float(np.mean(mode ** 2))
    k = 3.0
    sigma2 = 2.0 * m2 / k
    z = np.sqrt(sigma2 * rng.chisquare(k, size=(n_samples, N)))
    logq = (
        (k - 1) * np.log(z) - z * z / (2 * sigma2)
        - (k / 2 - 1) * math.log(2) - gammaln(k / 2) - k / 2 * math.log(sigma2)
    ).sum(axis=1) + math.lgamma(N + 1)
    u = np.sort(z, axis=1)
    ok = (u[:, 0] > 0) & np.all(np.diff(u, axis=1) > 0, axis=1)
    logw = np.full(n_samples, -np.inf)
    logw[ok] = logf(u[ok]) - logq[ok] - shift
    w = np.exp(logw)
    mean = float(w.mean())
    se = float(w.std(ddof=1) / math.sqrt(n_samples))
    return NormalizerResult(math.log(mean) + shift, se / mean, "importance")


def _in_chamber(u):
    return u[0] > 0 and np.all(np.diff(u) > 0)


def _minimize_in_chamber(fun, jac, hess, x0, gtol=1e-12):
    res = optimize.minimize(fun, x0, jac=jac, hess=hess, method="trust-exact", options={"gtol": gtol, "maxiter": 500})
    x = np.sort(np.abs(res.x))
    if not _in_chamber(x) or not np.all(np.isfinite(x)):
        raise NumericError(f"maximizer left the chamber: {res.message}")
    return x


def steady_beta_argmax(params):
    """Maximizer of steady_density_beta over the chamber (minimizer of F)."""
    N, nu = params.n_particles, params.nu
    x0 = np.sqrt((np.arange(1, N + 1) / (N + 1)) * 4 * (N + nu + 0.5))

    def fun(z):
        return potential_F(z, nu, N).value

    def jac(z):
        return potential_F(z, nu, N).gradient

    def hess(z):
        return potential_F_hessian(z, nu)

    return _minimize_in_chamber(fun, jac, hess, x0)


def laguerre_ensemble_argmax(params):
    """Maximizer of laguerre_ensemble_density over 0 < lam_1 < ... < lam_N."""
    N, beta = params.n_particles, params.beta
    a = laguerre_ensemble_exponent(params)
    if not a > 0:
        raise DomainError("Laguerre ensemble exponent must be positive for an interior maximum")
    x0 = (np.arange(1, N + 1) / (N + 1)) * 4 * (beta * N + a)

    def parts(v):
        d = v[:, None] - v[None, :]
        eye = np.eye(N, dtype=bool)
        inv = np.where(eye, 0.0, 1.0 / np.where(eye, 1.0, d))
        return d, eye, inv

    def fun(v):
        if np.any(v <= 0):
            return np.inf
        return -float(log_laguerre_ensemble_density(np.sort(v), params))

    def jac(v):
        _, _, inv = parts(v)
        return 0.5 - a / v - beta * inv.sum(axis=1)

    def hess(v):
        _, eye, inv = parts(v)
        H = beta * inv ** 2
        H[eye] = 0.0
        H = -H
        H[np.diag_indices(N)] = a / v ** 2 + beta * (inv ** 2).sum(axis=1)
        return H

    return _minimize_in_chamber(fun, jac, hess, x0)


def steady_nu_argmax(params):
    """Maximizer of steady_density_nu over the chamber."""
    N, beta, nu = params.n_particles, params.beta, params.nu
    x0 = math.sqrt(beta) * (1 + (np.arange(1, N + 1) - (N + 1) / 2) * 2.0 / math.sqrt(nu))
    x0 = np.maximum(x0, 1e-3 * math.sqrt(beta))

    def fun(u):
        if np.any(u <= 0):
            return np.inf
        try:
            return -float(log_steady_density_nu(np.sort(u), params))
        except DomainError:
            return np.inf

    def jac(u):
        u2 = u * u
        d = u2[:, None] - u2[None, :]
        eye = np.eye(N, dtype=bool)
        inv = np.where(eye, 0.0, 1.0 / np.where(eye, 1.0, d))
        return nu / 2 * (2 * u - 2 * beta / u) - beta * 2 * u * inv.sum(axis=1)

    def hess(u):
        u2 = u * u
        d = u2[:, None] - u2[None, :]
        eye = np.eye(N, dtype=bool)
        inv = np.where(eye, 0.0, 1.0 / np.where(eye, 1.0, d))
        H = beta * 4 * np.outer(u, u) * inv ** 2
        H[eye] = 0.0
        H = -H
        diag = nu * (1 + beta / u2) - beta * 2 * inv.sum(axis=1) + beta * 4 * u2 * (inv ** 2).sum(axis=1)
        H[np.diag_indices(N)] = diag
        return H

    return _minimize_in_chamber(fun, jac, hess, x0)


def sample_chamber(logf, start, n_chains=2000, n_steps=600, burn=200, step=None, seed=0):
    """Random-walk Metropolis samples of exp(logf) on 0 < u_1 < ... < u_N.

    Chains start at ``start``; the proposal scale adapts during burn-in
    towards a 30% acceptance rate. Returns an array (n_chains*(n_steps-burn), N).
    """
    rng = np.random.default_rng(seed)
    start = np.asarray(start, dtype=float)
    N = start.size
    step = 0.1 * float(np.min(np.diff(np.concatenate([[0.0], start])))) if step is None else float(step)
    x = np.tile(start, (n_chains, 1))
    lx = logf(x)
    out = []
    for it in range(n_steps):
        prop = x + step * rng.standard_normal(x.shape)
        ok = (prop[:, 0] > 0) & np.all(np.diff(prop, axis=1) > 0, axis=1)
        lp = np.full(n_chains, -np.inf)
        if np.any(ok):
            lp[ok] = logf(prop[ok])
        accept = np.log(rng.random(n_chains)) < lp - lx
        x[accept] = prop[accept]
        lx[accept] = lp[accept]
        if it < burn:
            rate = accept.mean()
            step *= math.exp(rate - 0.3)
        else:
            out.append(x.copy())
    return np.concatenate(out, axis=0)


def find_peaks(h, min_prominence):
    """Bin centers of interior maxima whose topographic prominence is at least
    ``min_prominence`` times the maximum height; ascending.

    Boundary bins are never reported, so a monotone histogram yields [].
    """
    dens = h.density() if isinstance(h, Histogram) else np.asarray(h[1], dtype=float)
    centers = h.centers if isinstance(h, Histogram) else np.asarray(h[0], dtype=float)
    if dens.size == 0:
        raise InvalidInputError("empty histogram")
    top = float(dens.max())
    if top <= 0:
        return []
    idx, _ = signal.find_peaks(dens, prominence=min_prominence * top)
    return [float(c) for c in centers[idx]]


def peak_half_width(h, center):
    """Full width at half prominence of the peak located at ``center``."""
    dens = h.density()
    k = int(np.argmin(np.abs(h.centers - center)))
    widths, _, _, _ = signal.peak_widths(dens, [k], rel_height=0.5)
    return float(widths[0] * h.bin_width)


def density_distance(h, f, kind="L1"):
    """L1 (sum |h - f| * width) or Sup distance between a histogram density and f at bin centers."""
    kind = kind.upper()
    dens = h.density()
    ref = np.asarray(f(h.centers) if callable(f) else f, dtype=float)
    if ref.shape != dens.shape:
        raise InvalidInputError("reference density must match the histogram bins")
    diff = np.abs(dens - ref)
    if kind == "L1":
        return float(diff.sum() * h.bin_width)
    if kind == "SUP":
        return float(diff.max())
    raise InvalidInputError(f"unknown distance kind {kind!r}")
