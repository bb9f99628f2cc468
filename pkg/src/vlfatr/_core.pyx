# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled trial kernels. Must stay bit-identical to ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log1p, expm1, ceil, floor, INFINITY
from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t ROLE_MULT = 0xD1B54A32D192ED03ULL
cdef double TWO_M53 = 1.0 / 9007199254740992.0

DEF ROLE_MESSAGE = 1
DEF ROLE_CODEBOOK = 2
DEF ROLE_NOISE = 3
DEF ROLE_COMPETITOR = 4


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t stream_key(uint64_t seed, uint64_t trial, uint64_t role) noexcept nogil:
    cdef uint64_t s = mix64(seed + GOLDEN * (trial + 1))
    return mix64(s ^ (role * ROLE_MULT))


cdef inline double uniform(uint64_t key, uint64_t idx) noexcept nogil:
    return <double>(mix64(key + GOLDEN * (idx + 1)) >> 11) * TWO_M53


cdef inline int draw(const double* cum, int n, double u) noexcept nogil:
    cdef int x = 0
    while x < n - 1 and u >= cum[x]:
        x += 1
    return x


def uniforms(uint64_t seed, uint64_t trial, uint64_t role, cnp.uint64_t[::1] idx):
    cdef Py_ssize_t i, n = idx.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef uint64_t key = stream_key(seed, trial, role)
    for i in range(n):
        o[i] = uniform(key, idx[i])
    return out


cdef inline int64_t draw_message(uint64_t seed, uint64_t trial, int64_t m, bint fixed_w1) noexcept nogil:
    cdef double u
    cdef int64_t w
    if fixed_w1:
        return 1
    u = uniform(stream_key(seed, trial, ROLE_MESSAGE), 0)
    w = <int64_t>floor(u * <double>m) + 1
    if w > m:
        w = m
    return w


cdef int64_t true_path(uint64_t seed, uint64_t trial, int64_t w, int64_t d, int64_t l, double gamma,
                       const double* px_cum, int nx, const double* w_cum, int ny,
                       const double* dens, int* ys) noexcept nogil:
    """Sample Y through the channel from codeword ``w``; return its stopping attempt."""
    cdef uint64_t kc = stream_key(seed, trial, ROLE_CODEBOOK)
    cdef uint64_t kn = stream_key(seed, trial, ROLE_NOISE)
    cdef int64_t L = d * l, n, base = (w - 1) * L, tau = l + 1
    cdef int x, y
    cdef double s = 0.0
    for n in range(L):
        x = draw(px_cum, nx, uniform(kc, <uint64_t>(base + n)))
        y = draw(w_cum + x * ny, ny, uniform(kn, <uint64_t>n))
        ys[n] = y
        s += dens[x * ny + y]
        if tau > l and (n + 1) % d == 0 and s >= gamma:
            tau = (n + 1) // d
    return tau


def explicit_block(cnp.int64_t[::1] trials, uint64_t seed, int64_t m, int64_t d, int64_t l,
                   double gamma, bint fixed_w1, const double[::1] px_cum,
                   const double[:, ::1] w_cum, const double[:, ::1] dens):
    cdef Py_ssize_t T = trials.shape[0], i
    cdef int nx = px_cum.shape[0], ny = w_cum.shape[1], x, y
    cdef int64_t L = d * l, j, n, w, tw, cbest, carg, tstar, what, horizon, base
    cdef uint64_t trial, kc
    cdef double s

    out_w = np.empty(T, dtype=np.int64)
    out_what = np.empty(T, dtype=np.int64)
    out_tau = np.empty(T, dtype=np.int64)
    out_true = np.empty(T, dtype=np.int64)
    out_comp = np.empty(T, dtype=np.int64)
    cdef cnp.int64_t[::1] ow = out_w, owh = out_what, ot = out_tau, otr = out_true, oc = out_comp

    cdef int* ys = <int*>malloc(max(L, 1) * sizeof(int))
    if ys == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(T):
                trial = <uint64_t>trials[i]
                w = draw_message(seed, trial, m, fixed_w1)
                tw = true_path(seed, trial, w, d, l, gamma, &px_cum[0], nx, &w_cum[0, 0], ny, &dens[0, 0], ys)
                kc = stream_key(seed, trial, ROLE_CODEBOOK)
                # competitors, highest index first; strict improvement keeps the max index
                cbest = l + 1
                carg = 0
                j = m
                while j >= 1:
                    if j != w:
                        horizon = (cbest - 1) * d
                        if horizon > L:
                            horizon = L
                        s = 0.0
                        base = (j - 1) * L
                        for n in range(horizon):
                            x = draw(&px_cum[0], nx, uniform(kc, <uint64_t>(base + n)))
                            s += dens[x, ys[n]]
                            if (n + 1) % d == 0 and s >= gamma:
                                cbest = (n + 1) // d
                                carg = j
                                break
                    j -= 1
                tstar = tw if tw < cbest else cbest
                if tstar > l:
                    what = m
                    tstar = l
                elif cbest == tstar and carg > w:
                    what = carg
                elif tw == tstar:
                    what = w
                else:
                    what = carg
                ow[i] = w
                owh[i] = what
                ot[i] = tstar
                otr[i] = tw
                oc[i] = cbest
    finally:
        free(ys)
    return out_w, out_what, out_tau, out_true, out_comp


cdef inline int64_t sample_min(int64_t count, double u, const double* log_surv, int64_t l) noexcept nogil:
    """Minimum stopping attempt of ``count`` i.i.d. competitors; ``l + 2`` if there are none."""
    cdef double target
    cdef int64_t t
    if count <= 0:
        return l + 2
    target = log1p(-u)
    for t in range(l):
        if <double>count * log_surv[t] <= target:
            return t + 1
    return l + 1


cdef inline int64_t top_position(int64_t count, double pi, double u) noexcept nogil:
    """1-based position, counted from the highest index, of the last group member tying at the minimum."""
    cdef double lq, frac, j
    if pi >= 1.0 or pi <= 0.0 or count <= 1:
        return 1
    lq = log1p(-pi)
    frac = -expm1(<double>count * lq)
    j = ceil(log1p(-u * frac) / lq)
    if j < 1.0:
        return 1
    if j > <double>count:
        return count
    return <int64_t>j


def collapsed_block(cnp.int64_t[::1] trials, uint64_t seed, int64_t m, int64_t d, int64_t l,
                    double gamma, bint fixed_w1, const double[::1] px_cum,
                    const double[:, ::1] w_cum, const double[:, ::1] dens,
                    const double[::1] log_surv, const double[::1] cond_eq):
    cdef Py_ssize_t T = trials.shape[0], i
    cdef int nx = px_cum.shape[0], ny = w_cum.shape[1]
    cdef int64_t L = d * l, w, tw, ma, mb, tmin, tstar, what, cmin
    cdef uint64_t trial, kq

    out_w = np.empty(T, dtype=np.int64)
    out_what = np.empty(T, dtype=np.int64)
    out_tau = np.empty(T, dtype=np.int64)
    out_true = np.empty(T, dtype=np.int64)
    out_comp = np.empty(T, dtype=np.int64)
    cdef cnp.int64_t[::1] ow = out_w, owh = out_what, ot = out_tau, otr = out_true, oc = out_comp

    cdef int* ys = <int*>malloc(max(L, 1) * sizeof(int))
    if ys == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(T):
                trial = <uint64_t>trials[i]
                w = draw_message(seed, trial, m, fixed_w1)
                tw = true_path(seed, trial, w, d, l, gamma, &px_cum[0], nx, &w_cum[0, 0], ny, &dens[0, 0], ys)
                kq = stream_key(seed, trial, ROLE_COMPETITOR)
                ma = sample_min(m - w, uniform(kq, 0), &log_surv[0], l)
                mb = sample_min(w - 1, uniform(kq, 1), &log_surv[0], l)
                tmin = tw
                if ma < tmin:
                    tmin = ma
                if mb < tmin:
                    tmin = mb
                tstar = tmin
                if tmin > l:
                    what = m
                    tstar = l
                elif ma == tmin:
                    what = m - top_position(m - w, cond_eq[tmin - 1], uniform(kq, 2)) + 1
                elif tw == tmin:
                    what = w
                else:
                    what = w - top_position(w - 1, cond_eq[tmin - 1], uniform(kq, 2))
                cmin = ma if ma < mb else mb
                if cmin > l + 1:
                    cmin = l + 1
                ow[i] = w
                owh[i] = what
                ot[i] = tstar
                otr[i] = tw
                oc[i] = cmin
    finally:
        free(ys)
    return out_w, out_what, out_tau, out_true, out_comp
