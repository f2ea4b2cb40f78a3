"""Partitions, monomial symmetric polynomials and Jack polynomials.

Jack polynomials are stored through their monomial coefficients
u[tau, lam] at a fixed numeric alpha. The coefficients come from the
eigenoperator

    D = (alpha/2) sum_i x_i^2 d_i^2 + sum_{i != j} x_i^2/(x_i - x_j) d_i

which is triangular on monomials in dominance order, so each P_tau is
obtained by one triangular solve.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import solve_triangular

from .errors import CapacityError, DomainError, InvalidInputError

MAX_DEGREE = 30

# Upper bound on the number of (point, composition) products held in memory
# at once when evaluating monomials in bulk.
_CHUNK_ELEMS = 4_000_000


class Partition(tuple):
    """Weakly decreasing tuple of positive integers (trailing zeros dropped)."""

    __slots__ = ()

    def __new__(cls, parts=()):
        if isinstance(parts, Partition):
            return parts
        vals = []
        for v in parts:
            iv = int(v)
            if iv != v or iv < 0:
                raise InvalidInputError(f"partition parts must be natural numbers, got {v!r}")
            vals.append(iv)
        for a, b in zip(vals, vals[1:]):
            if a < b:
                raise InvalidInputError(f"partition parts must be weakly decreasing: {tuple(vals)}")
        while vals and vals[-1] == 0:
            vals.pop()
        if 0 in vals:
            raise InvalidInputError(f"zero part before a positive part: {tuple(vals)}")
        return super().__new__(cls, vals)

    @property
    def parts(self):
        return tuple(self)

    def length(self):
        return len(self)

    def modulus(self):
        return sum(self)

    def conjugate(self):
        if not self:
            return Partition()
        return Partition(sum(1 for p in self if p > j) for j in range(self[0]))

    def padded(self, n):
        if len(self) > n:
            raise InvalidInputError(f"partition {tuple(self)} has more than {n} parts")
        return tuple(self) + (0,) * (n - len(self))

    def __repr__(self):
        return f"Partition({tuple(self)!r})"


@dataclass
class MonomialExpansion:
    """Coefficients of a homogeneous symmetric polynomial in the m_lambda basis."""

    coeffs: dict = field(default_factory=dict)
    degree: int = 0

    def __post_init__(self):
        for key in self.coeffs:
            if sum(key) != self.degree:
                raise InvalidInputError(f"key {key} has modulus {sum(key)} != degree {self.degree}")

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        total = np.zeros(x.shape[:-1])
        for lam, c in self.coeffs.items():
            total = total + c * monomial_eval(lam, x)
        return total[()] if total.ndim == 0 else total


def _check_degree(n):
    if n < 0:
        raise InvalidInputError(f"degree must be nonnegative, got {n}")
    if n > MAX_DEGREE:
        raise CapacityError(f"degree {n} exceeds the supported cap of {MAX_DEGREE}")


def _gen_partitions(n, largest, max_len):
    if n == 0:
        yield ()
        return
    if max_len == 0:
        return
    for first in range(min(n, largest), 0, -1):
        for rest in _gen_partitions(n - first, first, max_len - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def _partitions(n, max_len):
    return tuple(Partition(p) for p in _gen_partitions(n, n, max_len))


def partitions_up_to(n, max_len):
    """All partitions of exactly ``n`` with at most ``max_len`` parts.

    Ordered reverse-lexicographically, e.g. (3), (2, 1), (1, 1, 1). This is a
    linear extension of dominance order, largest first.
    """
    n, max_len = int(n), int(max_len)
    _check_degree(n)
    if max_len < 1:
        raise InvalidInputError(f"max_len must be >= 1, got {max_len}")
    return list(_partitions(n, max_len))


def dominance_leq(lam, tau):
    """True iff lam <= tau in dominance order. Returns False when moduli differ."""
    lam, tau = Partition(lam), Partition(tau)
    if sum(lam) != sum(tau):
        return False
    a = b = 0
    for i in range(max(len(lam), len(tau))):
        a += lam[i] if i < len(lam) else 0
        b += tau[i] if i < len(tau) else 0
        if a > b:
            return False
    return True


def multinomial_M(lam, N):
    """Number of distinct permutations of lam padded with zeros to N entries."""
    lam = Partition(lam)
    padded = lam.padded(int(N))
    out = math.factorial(N)
    for _, grp in itertools.groupby(padded):
        out //= math.factorial(len(list(grp)))
    return out


def _multiset_permutations(items):
    items = sorted(items, reverse=True)
    values = []
    counts = []
    for v, grp in itertools.groupby(items):
        values.append(v)
        counts.append(len(list(grp)))
    n = len(items)
    out = []
    cur = [0] * n

    def rec(pos):
        if pos == n:
            out.append(tuple(cur))
            return
        for k, v in enumerate(values):
            if counts[k]:
                counts[k] -= 1
                cur[pos] = v
                rec(pos + 1)
                counts[k] += 1

    rec(0)
    return out


@lru_cache(maxsize=4096)
def monomial_terms(lam, N):
    """Exponent vectors of the distinct terms of m_lam in N variables."""
    lam = Partition(lam)
    arr = np.array(_multiset_permutations(lam.padded(N)), dtype=np.int64).reshape(-1, N)
    arr.setflags(write=False)
    return arr


def _as_points(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        raise InvalidInputError("expected a vector of coordinates")
    return x


def monomial_eval(lam, x):
    """m_lam(x); ``x`` may carry leading batch axes, the last axis holds the N variables."""
    lam = Partition(lam)
    x = _as_points(x)
    N = x.shape[-1]
    if len(lam) > N:
        raise InvalidInputError(f"partition {tuple(lam)} longer than the {N} variables")
    exps = monomial_terms(lam, N)
    if not lam:
        out = np.ones(x.shape[:-1])
        return out[()] if out.ndim == 0 else out
    terms = np.ones(x.shape[:-1] + (exps.shape[0],))
    for i in range(N):
        terms = terms * x[..., i, None] ** exps[:, i]
    out = terms.sum(axis=-1)
    return out[()] if out.ndim == 0 else out


@lru_cache(maxsize=256)
def _composition_table(n, N):
    """Every composition of n into N parts, grouped by its sorted partition.

    Returns (exponents, starts): rows of ``exponents`` for partition k of
    partitions_up_to(n, N) occupy exponents[starts[k]:starts[k+1]].
    """
    rows = []
    starts = []
    for lam in _partitions(n, N):
        starts.append(len(rows))
        rows.extend(_multiset_permutations(lam.padded(N)))
    exps = np.array(rows, dtype=np.int64).reshape(-1, N)
    starts = np.array(starts, dtype=np.int64)
    exps.setflags(write=False)
    starts.setflags(write=False)
    return exps, starts


def monomial_values(n, X):
    """m_lam(X) for every lam in partitions_up_to(n, N), shape (K, P)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    K, N = X.shape
    _check_degree(n)
    if n == 0:
        return np.ones((K, 1))
    exps, starts = _composition_table(n, N)
    C = exps.shape[0]
    out = np.empty((K, len(starts)))
    step = max(1, _CHUNK_ELEMS // max(C, 1))
    powers = np.arange(n + 1)
    for lo in range(0, K, step):
        xs = X[lo:lo + step]
        pw = xs[:, :, None] ** powers
        prod = np.ones((xs.shape[0], C))
        for i in range(N):
            prod *= pw[:, i, exps[:, i]]
        out[lo:lo + step] = np.add.reduceat(prod, starts, axis=1)
    return out


def hook_c(tau, alpha):
    """Product over cells of alpha*arm + leg + 1."""
    tau = Partition(tau)
    conj = tau.conjugate()
    out = 1.0
    for i, row in enumerate(tau, start=1):
        for j in range(1, row + 1):
            out *= alpha * (row - j) + conj[j - 1] - i + 1
    return out


def hook_c_prime(tau, alpha):
    """Product over cells of alpha*(arm + 1) + leg."""
    tau = Partition(tau)
    conj = tau.conjugate()
    out = 1.0
    for i, row in enumerate(tau, start=1):
        for j in range(1, row + 1):
            out *= alpha * (row - j + 1) + conj[j - 1] - i
    return out


def gen_pochhammer(b, tau, alpha):
    """Generalized Pochhammer symbol (b)_tau in rising-product form."""
    tau = Partition(tau)
    out = 1.0
    for i, row in enumerate(tau, start=1):
        shift = b - (i - 1) / alpha
        for j in range(1, row + 1):
            f = shift + j - 1
            if f == 0:
                raise DomainError(f"generalized Pochhammer pole at b={b}, tau={tuple(tau)}, alpha={alpha}")
            out *= f
    return out


@lru_cache(maxsize=256)
def cell_table(n, N):
    """Cells of every partition of degree n (length <= N) as flat arrays.

    Returns (row, col, arm, leg, starts) with 1-based row/col; cells of the
    k-th partition occupy [starts[k], starts[k+1]).
    """
    rows, cols, arms, legs, starts = [], [], [], [], []
    for tau in _partitions(n, N):
        starts.append(len(rows))
        conj = tau.conjugate()
        for i, r in enumerate(tau, start=1):
            for j in range(1, r + 1):
                rows.append(i)
                cols.append(j)
                arms.append(r - j)
                legs.append(conj[j - 1] - i)
    out = tuple(np.array(v, dtype=float) for v in (rows, cols, arms, legs)) + (
        np.array(starts, dtype=np.int64),
    )
    for a in out:
        a.setflags(write=False)
    return out


@lru_cache(maxsize=256)
def _raising_matrix(n, N):
    """C[nu, mu]: coefficient of m_mu in the off-diagonal part of D m_nu."""
    parts = _partitions(n, N)
    index = {p: k for k, p in enumerate(parts)}
    P = len(parts)
    C = np.zeros((P, P))
    for m, mu in enumerate(parts):
        b = list(mu.padded(N))
        for i in range(N):
            for j in range(i + 1, N):
                hi, lo = b[i], b[j]
                s = hi + lo
                for q in range(lo):
                    p = s - q
                    nb = b.copy()
                    nb[i], nb[j] = p, q
                    nu = Partition(sorted(nb, reverse=True))
                    C[index[nu], m] += p - q
    C.setflags(write=False)
    return C


@lru_cache(maxsize=256)
def _dominance_matrix(n, N):
    parts = _partitions(n, N)
    P = len(parts)
    cums = np.zeros((P, N), dtype=np.int64)
    for k, p in enumerate(parts):
        cums[k] = np.cumsum(p.padded(N))
    D = np.all(cums[None, :, :] <= cums[:, None, :], axis=2)  # D[t, m]: parts[m] <= parts[t]
    D.setflags(write=False)
    return D


@lru_cache(maxsize=512)
def _jack_matrix(n, N, alpha):
    """Upper-triangular U with U[t, m] = u_{tau_t, lam_m}(alpha)."""
    parts = _partitions(n, N)
    P = len(parts)
    if P == 1:
        U = np.ones((1, 1))
        U.setflags(write=False)
        return U
    C = _raising_matrix(n, N)
    dom = _dominance_matrix(n, N)
    e = np.array(
        [alpha * sum(v * (v - 1) for v in p) / 2 - sum(i * v for i, v in enumerate(p)) for p in parts]
    )
    U = np.zeros((P, P))
    for t in range(P):
        U[t, t] = 1.0
        idx = np.flatnonzero(dom[t, t + 1:]) + t + 1
        if idx.size == 0:
            continue
        sub = C[np.ix_(idx, idx)]
        L = np.diag(e[t] - e[idx]) - sub.T
        rhs = C[t, idx]
        U[t, idx] = solve_triangular(L, rhs, lower=True)
    U.setflags(write=False)
    return U


def _check_alpha(alpha):
    alpha = float(alpha)
    if not alpha > 0 or not math.isfinite(alpha):
        raise InvalidInputError(f"alpha must be positive and finite, got {alpha}")
    return alpha


def jack_matrix(n, N, alpha):
    """(partitions, U) for degree n in N variables; rows of U are Jack polynomials."""
    _check_degree(int(n))
    return list(_partitions(int(n), int(N))), _jack_matrix(int(n), int(N), _check_alpha(alpha))


def jack_in_monomial_basis(tau, alpha, N):
    tau = Partition(tau)
    N = int(N)
    if len(tau) > N:
        raise InvalidInputError(f"partition {tuple(tau)} longer than N={N}")
    n = sum(tau)
    parts, U = jack_matrix(n, N, alpha)
    t = parts.index(tau)
    dom = _dominance_matrix(n, N) if n else np.ones((1, 1), dtype=bool)
    coeffs = {parts[m]: float(U[t, m]) for m in range(t, len(parts)) if dom[t, m]}
    coeffs[tau] = 1.0
    return MonomialExpansion(coeffs=coeffs, degree=n)


def jack_values(n, alpha, X):
    """P_tau(X) for every tau in partitions_up_to(n, N); shape (K, P)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    _, U = jack_matrix(n, X.shape[1], alpha)
    return monomial_values(n, X) @ U.T


def jack_eval(tau, alpha, x):
    tau = Partition(tau)
    x = _as_points(x)
    N = x.shape[-1]
    if len(tau) > N:
        raise InvalidInputError(f"partition {tuple(tau)} longer than the {N} variables")
    n = sum(tau)
    parts, U = jack_matrix(n, N, alpha)
    t = parts.index(tau)
    flat = x.reshape(-1, N)
    out = monomial_values(n, flat) @ U[t]
    out = out.reshape(x.shape[:-1])
    return out[()] if out.ndim == 0 else out
