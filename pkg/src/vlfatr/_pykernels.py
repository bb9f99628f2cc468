"""Pure-numpy trial kernels, vectorised over a block of trials.

Same signatures and same random streams as the compiled ``_core`` module, so
either backend reproduces the other's trials exactly.
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
ROLE_MULT = np.uint64(0xD1B54A32D192ED03)
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)
_TWO_M53 = 1.0 / 9007199254740992.0

ROLE_MESSAGE = 1
ROLE_CODEBOOK = 2
ROLE_NOISE = 3
ROLE_COMPETITOR = 4


def mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _C1
    z = (z ^ (z >> np.uint64(27))) * _C2
    return z ^ (z >> np.uint64(31))


def stream_key(seed, trials, role: int) -> np.ndarray:
    t = np.asarray(trials, dtype=np.uint64)
    s = mix64(np.uint64(seed) + GOLDEN * (t + np.uint64(1)))
    return mix64(s ^ np.uint64((role * int(ROLE_MULT)) & 0xFFFFFFFFFFFFFFFF))


def _uniform(key: np.ndarray, idx: np.ndarray) -> np.ndarray:
    bits = mix64(key + GOLDEN * (idx.astype(np.uint64) + np.uint64(1)))
    return (bits >> np.uint64(11)).astype(np.float64) * _TWO_M53


def uniforms(seed, trial, role, idx) -> np.ndarray:
    key = stream_key(seed, np.array([trial]), role)
    return _uniform(key, np.asarray(idx, dtype=np.uint64))


def _draw(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.searchsorted(cum[:-1], u, side="right")


def _draw_rows(w_cum: np.ndarray, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.sum(w_cum[x][..., :-1] <= u[..., None], axis=-1)


def _messages(trials, seed, m, fixed_w1):
    if fixed_w1:
        return np.ones(trials.size, dtype=np.int64)
    u = _uniform(stream_key(seed, trials, ROLE_MESSAGE), np.zeros(trials.size, dtype=np.uint64))
    w = np.floor(u * float(m)).astype(np.int64) + 1
    return np.minimum(w, m)


def _first_crossing(s: np.ndarray, d: int, l: int, gamma: float) -> np.ndarray:
    hit = s[:, d - 1::d] >= gamma
    any_hit = hit.any(axis=1)
    return np.where(any_hit, np.argmax(hit, axis=1) + 1, l + 1).astype(np.int64)


def _true_path(trials, seed, w, d, l, gamma, px_cum, w_cum, dens):
    L = d * l
    n = np.arange(L, dtype=np.int64)
    kc = stream_key(seed, trials, ROLE_CODEBOOK)[:, None]
    kn = stream_key(seed, trials, ROLE_NOISE)[:, None]
    x = _draw(px_cum, _uniform(kc, (w[:, None] - 1) * L + n[None, :]))
    y = _draw_rows(w_cum, x, _uniform(kn, np.broadcast_to(n, x.shape)))
    s = np.cumsum(dens[x, y], axis=1)
    return y, _first_crossing(s, d, l, gamma), kc


def _decide(w, tw, cbest, carg, m, l):
    tstar = np.minimum(tw, cbest)
    what = np.where(tw == tstar, w, carg)
    what = np.where((cbest == tstar) & (carg > w), carg, what)
    nodet = tstar > l
    what = np.where(nodet, m, what)
    tstar = np.where(nodet, l, tstar)
    return what, tstar


def explicit_block(trials, seed, m, d, l, gamma, fixed_w1, px_cum, w_cum, dens):
    trials = np.asarray(trials, dtype=np.int64)
    T = trials.size
    L = d * l
    w = _messages(trials, seed, m, fixed_w1)
    y, tw, kc = _true_path(trials, seed, w, d, l, gamma, px_cum, w_cum, dens)
    n = np.arange(L, dtype=np.int64)[None, :]
    cbest = np.full(T, l + 1, dtype=np.int64)
    carg = np.zeros(T, dtype=np.int64)
    for j in range(m, 0, -1):
        x = _draw(px_cum, _uniform(kc, np.broadcast_to((j - 1) * L + n, (T, L))))
        tj = _first_crossing(np.cumsum(dens[x, y], axis=1), d, l, gamma)
        better = (tj < cbest) & (w != j)
        cbest = np.where(better, tj, cbest)
        carg = np.where(better, j, carg)
    what, tstar = _decide(w, tw, cbest, carg, m, l)
    return w, what, tstar, tw, cbest


def _sample_min(count, u, log_surv, l):
    target = np.log1p(-u)
    with np.errstate(invalid="ignore"):  # 0 * -inf for empty groups, masked below
        ok = count[:, None].astype(np.float64) * log_surv[None, :l] <= target[:, None]
    t = np.where(ok.any(axis=1), np.argmax(ok, axis=1) + 1, l + 1).astype(np.int64)
    return np.where(count <= 0, l + 2, t)


def _top_position(count, pi, u):
    with np.errstate(divide="ignore", invalid="ignore"):
        lq = np.log1p(-pi)
        frac = -np.expm1(count.astype(np.float64) * lq)
        j = np.ceil(np.log1p(-u * frac) / lq)
    j = np.where(j < 1.0, 1.0, j)
    j = np.where(j > count, count, j)
    j = np.where((pi >= 1.0) | (pi <= 0.0) | (count <= 1), 1.0, j)
    return j.astype(np.int64)


def collapsed_block(trials, seed, m, d, l, gamma, fixed_w1, px_cum, w_cum, dens, log_surv, cond_eq):
    trials = np.asarray(trials, dtype=np.int64)
    T = trials.size
    w = _messages(trials, seed, m, fixed_w1)
    _, tw, _ = _true_path(trials, seed, w, d, l, gamma, px_cum, w_cum, dens)
    kq = stream_key(seed, trials, ROLE_COMPETITOR)
    u0, u1, u2 = (_uniform(kq, np.full(T, k, dtype=np.uint64)) for k in range(3))
    na = m - w
    nb = w - 1
    ma = _sample_min(na, u0, log_surv, l)
    mb = _sample_min(nb, u1, log_surv, l)
    tmin = np.minimum(tw, np.minimum(ma, mb))
    pi = cond_eq[np.clip(tmin, 1, l) - 1]
    what = np.where(tw == tmin, w, w - _top_position(nb, pi, u2))
    what = np.where(ma == tmin, m - _top_position(na, pi, u2) + 1, what)
    nodet = tmin > l
    what = np.where(nodet, m, what)
    tstar = np.where(nodet, l, tmin)
    cmin = np.minimum(np.minimum(ma, mb), l + 1)
    return w, what, tstar, tw, cmin
