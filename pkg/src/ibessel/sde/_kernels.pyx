# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Euler-Maruyama ensemble loop with reject-and-halve.

Mirrors ``_fallback.run_paths`` operation for operation; see that module for
the algorithm description.
"""

from libc.math cimport exp, log1p, sqrt, NAN
from libc.stdint cimport int64_t, uint64_t
from libc.stdlib cimport free, malloc

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t PATH_SALT = 0x632BE59BD9B4E019ULL
cdef uint64_t MASK52 = (1ULL << 52) - 1
cdef double ZIG_R = 3.6541528853610088
cdef double INV_2_53 = 1.0 / 9007199254740992.0


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = z ^ (z >> 30)
    z = z * 0xBF58476D1CE4E5B9ULL
    z = z ^ (z >> 27)
    z = z * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef struct Stream:
    uint64_t key
    uint64_t counter


cdef inline uint64_t next_bits(Stream* s) noexcept nogil:
    s.counter += 1
    return mix64(s.key + s.counter * GOLDEN)


cdef inline double next_uniform(Stream* s) noexcept nogil:
    return <double>(<int64_t>(next_bits(s) >> 11)) * INV_2_53


cdef inline double next_normal(Stream* s, const uint64_t* ki, const double* wi,
                               const double* fi) noexcept nogil:
    cdef uint64_t bits, rabs
    cdef int idx, neg
    cdef double x, xx, yy
    while True:
        bits = next_bits(s)
        idx = <int>(bits & 0xFF)
        neg = <int>((bits >> 8) & 1)
        rabs = (bits >> 9) & MASK52
        # branchless sign: a 50/50 branch here mispredicts half the time
        x = <double>(<int64_t>rabs) * wi[idx] * (1.0 - 2.0 * <double>neg)
        if rabs < ki[idx]:
            return x
        if idx == 0:
            while True:
                xx = -log1p(-next_uniform(s)) / ZIG_R
                yy = -log1p(-next_uniform(s))
                if yy + yy > xx * xx:
                    return -(ZIG_R + xx) if neg else ZIG_R + xx
        else:
            if (fi[idx - 1] - fi[idx]) * next_uniform(s) + fi[idx] < exp(-0.5 * x * x):
                return x


cdef inline void drift(int model, int n, const double* x, double* out,
                       double halfbeta, double c1) noexcept nogil:
    cdef int i, j
    cdef double r, xi, xj
    for i in range(n):
        out[i] = 0.0
    if model == 0:
        for i in range(n):
            xi = x[i]
            for j in range(i + 1, n):
                xj = x[j]
                r = 1.0 / (xi * xi - xj * xj)
                out[i] = out[i] + 2.0 * xi * r
                out[j] = out[j] - 2.0 * xj * r
        for i in range(n):
            out[i] = halfbeta * (c1 / x[i] + out[i])
    else:
        for i in range(n):
            xi = x[i]
            for j in range(i + 1, n):
                r = 1.0 / (xi - x[j])
                out[i] = out[i] + r
                out[j] = out[j] - r
        for i in range(n):
            out[i] = halfbeta * out[i]


cdef inline bint valid(int model, int n, const double* y) noexcept nogil:
    cdef int i
    if model == 0 and not (y[0] > 0.0):
        return False
    for i in range(n - 1):
        if not (y[i + 1] > y[i]):
            return False
    return True


def run_paths(int model, const double[::1] x0, double beta, double nu, double dt,
              int64_t n_steps, uint64_t seed, int64_t path_start,
              double[:, ::1] finals, const uint64_t[::1] ki,
              const double[::1] wi, const double[::1] fi,
              int max_halvings=20, int halving_bits=20):
    """Integrate ``finals.shape[0]`` paths starting at global index ``path_start``.

    Returns (accepted_steps, rejected_steps, stuck_count); stuck rows are NaN.
    """
    cdef int n = x0.shape[0]
    cdef int64_t n_paths = finals.shape[0]
    cdef double halfbeta = 0.5 * beta
    cdef double c1 = nu + 0.5
    cdef double unit = dt / <double>(1LL << halving_bits)
    cdef int64_t accepted = 0, rejected = 0, stuck = 0
    cdef int64_t p, remaining, sub
    cdef int level, tries, i
    cdef double h, sqh
    cdef double h_of[64]
    cdef double sqh_of[64]
    cdef Stream s
    if not 0 < max_halvings < halving_bits + 1 or halving_bits > 62:
        raise ValueError("need 0 < max_halvings <= halving_bits <= 62")
    for i in range(max_halvings + 1):
        h_of[i] = <double>((<int64_t>1) << (halving_bits - i)) * unit
        sqh_of[i] = sqrt(h_of[i])
    cdef double* x = <double*>malloc(n * sizeof(double))
    cdef double* y = <double*>malloc(n * sizeof(double))
    cdef double* d = <double*>malloc(n * sizeof(double))
    cdef double* g = <double*>malloc(n * sizeof(double))
    if x == NULL or y == NULL or d == NULL or g == NULL:
        free(x); free(y); free(d); free(g)
        raise MemoryError()
    try:
        with nogil:
            for p in range(n_paths):
                s.key = mix64(seed ^ mix64(<uint64_t>(path_start + p) + PATH_SALT))
                s.counter = 0
                for i in range(n):
                    x[i] = x0[i]
                remaining = n_steps << halving_bits
                level = 0
                tries = 0
                while remaining > 0:
                    sub = (<int64_t>1) << (halving_bits - level)
                    h = h_of[level]
                    sqh = sqh_of[level]
                    for i in range(n):
                        g[i] = next_normal(&s, &ki[0], &wi[0], &fi[0])
                    drift(model, n, x, d, halfbeta, c1)
                    for i in range(n):
                        y[i] = x[i] + d[i] * h + sqh * g[i]
                    if valid(model, n, y):
                        for i in range(n):
                            x[i] = y[i]
                        remaining -= sub
                        accepted += 1
                        tries = 0
                        if level > 0 and remaining % (2 * sub) == 0:
                            level -= 1
                    else:
                        rejected += 1
                        if level < max_halvings:
                            level += 1
                            continue
                        tries += 1
                        if tries > max_halvings:
                            stuck += 1
                            for i in range(n):
                                x[i] = NAN
                            break
                for i in range(n):
                    finals[p, i] = x[i]
    finally:
        free(x); free(y); free(d); free(g)
    return accepted, rejected, stuck
