"""Counter-based normal variates shared by both integrator backends.

Path p with seed s owns the stream

    key  = mix(s ^ mix(p + PATH_SALT))
    u_c  = mix(key + (c + 1) * GOLDEN)        c = 0, 1, 2, ...

where ``mix`` is the splitmix64 finalizer. Normals are drawn from the
64-bit words with a 256-layer ziggurat. A path's stream depends only on
(seed, path index), so results do not depend on chunking or scheduling.
"""

from __future__ import annotations

import math

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
PATH_SALT = 0x632BE59BD9B4E019
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
MASK64 = (1 << 64) - 1

ZIG_R = 3.6541528853610088
ZIG_V = 4.92867323399e-3
_M52 = float(1 << 52)
MASK52 = (1 << 52) - 1


def _build_tables():
    dn = ZIG_R
    tn = dn
    q = ZIG_V / math.exp(-0.5 * dn * dn)
    ki = np.zeros(256, dtype=np.uint64)
    wi = np.zeros(256)
    fi = np.zeros(256)
    ki[0] = np.uint64(int((dn / q) * _M52))
    ki[1] = 0
    wi[0] = q / _M52
    wi[255] = dn / _M52
    fi[0] = 1.0
    fi[255] = math.exp(-0.5 * dn * dn)
    for i in range(254, 0, -1):
        dn = math.sqrt(-2.0 * math.log(ZIG_V / dn + math.exp(-0.5 * dn * dn)))
        ki[i + 1] = np.uint64(int((dn / tn) * _M52))
        tn = dn
        fi[i] = math.exp(-0.5 * dn * dn)
        wi[i] = dn / _M52
    for a in (ki, wi, fi):
        a.setflags(write=False)
    return ki, wi, fi


ZIG_KI, ZIG_WI, ZIG_FI = _build_tables()


def mix64(z):
    """splitmix64 finalizer on a uint64 array (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = z ^ (z >> np.uint64(30))
        z = z * np.uint64(MIX1)
        z = z ^ (z >> np.uint64(27))
        z = z * np.uint64(MIX2)
        z = z ^ (z >> np.uint64(31))
    return z


def path_keys(seed, path_indices):
    seed = np.uint64(int(seed) & MASK64)
    p = np.asarray(path_indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(seed ^ mix64(p + np.uint64(PATH_SALT)))


def draw_bits(keys, counters):
    with np.errstate(over="ignore"):
        return mix64(keys + (counters + np.uint64(1)) * np.uint64(GOLDEN))


def _uniform(bits):
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def normals(keys, counters):
    """One standard normal per entry; ``counters`` is advanced in place."""
    keys = np.asarray(keys, dtype=np.uint64)
    out = np.empty(keys.shape[0])
    pending = np.arange(keys.shape[0])
    while pending.size:
        k = keys[pending]
        bits = draw_bits(k, counters[pending])
        counters[pending] += np.uint64(1)
        idx = (bits & np.uint64(0xFF)).astype(np.intp)
        negbit = (bits >> np.uint64(8)) & np.uint64(1)
        neg = negbit.astype(bool)
        rabs = (bits >> np.uint64(9)) & np.uint64(MASK52)
        x = rabs.astype(np.float64) * ZIG_WI[idx] * (1.0 - 2.0 * negbit.astype(np.float64))
        fast = rabs < ZIG_KI[idx]
        out[pending[fast]] = x[fast]
        slow = ~fast
        tail = slow & (idx == 0)
        wedge = slow & (idx != 0)
        retry = []
        if np.any(tail):
            tp = pending[tail]
            tneg = neg[tail]
            todo = np.arange(tp.size)
            while todo.size:
                p = tp[todo]
                u1 = _uniform(draw_bits(keys[p], counters[p]))
                counters[p] += np.uint64(1)
                u2 = _uniform(draw_bits(keys[p], counters[p]))
                counters[p] += np.uint64(1)
                xx = -np.log1p(-u1) / ZIG_R
                yy = -np.log1p(-u2)
                ok = yy + yy > xx * xx
                acc = todo[ok]
                val = ZIG_R + xx[ok]
                out[tp[acc]] = np.where(tneg[acc], -val, val)
                todo = todo[~ok]
        if np.any(wedge):
            wp = pending[wedge]
            wi_ = idx[wedge]
            wx = x[wedge]
            u = _uniform(draw_bits(keys[wp], counters[wp]))
            counters[wp] += np.uint64(1)
            ok = (ZIG_FI[wi_ - 1] - ZIG_FI[wi_]) * u + ZIG_FI[wi_] < np.exp(-0.5 * wx * wx)
            out[wp[ok]] = wx[ok]
            retry.append(wp[~ok])
        pending = np.concatenate(retry) if retry else pending[:0]
    return out


def path_normals(seed, path_index, n):
    """First ``n`` normals of a single path's stream (reference helper)."""
    keys = path_keys(seed, [path_index])
    ctr = np.zeros(1, dtype=np.uint64)
    return np.array([normals(keys, ctr)[0] for _ in range(n)])
