"""Pure-numpy ensemble integrator, vectorized across paths.

Each path follows Euler-Maruyama with reject-and-halve. Time is counted in
integer units of dt / 2**halving_bits. A proposal that leaves the chamber is
discarded and the path retries with half the step and fresh noise; after an
accepted substep the step doubles again once the remaining time is aligned.
The depth is capped at ``max_halvings``; more than ``max_halvings``
consecutive rejections at that depth mark the path as stuck (NaN row).
"""

from __future__ import annotations

import numpy as np

from .rng import path_keys, normals

BESSEL_B = 0
DYSON_A = 1


def drift_batch(model, x, halfbeta, c1):
    """Drift for a (P, N) batch; pair terms share one reciprocal per pair."""
    P, n = x.shape
    out = np.zeros_like(x)
    if model == BESSEL_B:
        for i in range(n):
            xi = x[:, i]
            for j in range(i + 1, n):
                xj = x[:, j]
                r = 1.0 / (xi * xi - xj * xj)
                out[:, i] = out[:, i] + 2.0 * xi * r
                out[:, j] = out[:, j] - 2.0 * xj * r
        return halfbeta * (c1 / x + out)
    for i in range(n):
        xi = x[:, i]
        for j in range(i + 1, n):
            r = 1.0 / (xi - x[:, j])
            out[:, i] = out[:, i] + r
            out[:, j] = out[:, j] - r
    return halfbeta * out


def valid_batch(model, y):
    ok = np.all(y[:, 1:] > y[:, :-1], axis=1)
    if model == BESSEL_B:
        ok &= y[:, 0] > 0.0
    return ok


def run_paths(model, x0, beta, nu, dt, n_steps, seed, path_start, finals,
              max_halvings=20, halving_bits=20):
    P, n = finals.shape
    x0 = np.asarray(x0, dtype=float)
    keys = path_keys(seed, np.arange(path_start, path_start + P, dtype=np.uint64))
    ctr = np.zeros(P, dtype=np.uint64)
    x = np.tile(x0, (P, 1))
    remaining = np.full(P, int(n_steps) << halving_bits, dtype=np.int64)
    level = np.zeros(P, dtype=np.int64)
    tries = np.zeros(P, dtype=np.int64)
    halfbeta = 0.5 * beta
    c1 = nu + 0.5
    unit = dt / float(1 << halving_bits)
    accepted = rejected = stuck = 0
    active = np.arange(P)
    while active.size:
        sub = np.left_shift(np.int64(1), halving_bits - level[active])
        h = sub.astype(np.float64) * unit
        sqh = np.sqrt(h)
        ka = keys[active]
        ca = ctr[active]
        g = np.empty((active.size, n))
        for i in range(n):
            g[:, i] = normals(ka, ca)
        ctr[active] = ca
        xa = x[active]
        d = drift_batch(model, xa, halfbeta, c1)
        y = xa + d * h[:, None] + sqh[:, None] * g
        ok = valid_batch(model, y)

        acc = active[ok]
        x[acc] = y[ok]
        sub_ok = sub[ok]
        remaining[acc] -= sub_ok
        up = (level[acc] > 0) & (remaining[acc] % (2 * sub_ok) == 0)
        level[acc[up]] -= 1
        tries[acc] = 0
        accepted += int(ok.sum())

        bad = active[~ok]
        rejected += int(bad.size)
        at_floor = level[bad] >= max_halvings
        level[bad[~at_floor]] += 1
        floor = bad[at_floor]
        tries[floor] += 1
        dead = floor[tries[floor] > max_halvings]
        stuck += int(dead.size)
        x[dead] = np.nan
        remaining[dead] = 0

        active = active[remaining[active] > 0]
    finals[:, :] = x
    return accepted, rejected, stuck
