"""Achievable-rate bounds for VLF codes under a strict delay constraint.

All functions take a :class:`~vlfatr.channel.ChannelInfo` and return nats per
channel symbol unless stated otherwise. The threshold used throughout is
``gamma(alpha) = C*d*l - sqrt(2*C*d*l*log(1/alpha))`` and most of the algebra is
done in ``t = log(1/alpha)`` so that tiny alphas never underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from statistics import NormalDist

import mpmath
import numpy as np

from .channel import LOG2, ChannelInfo


class InadmissibleAlpha(ValueError):
    pass


@dataclass(frozen=True)
class VlfParams:
    d: int
    l: int
    epsilon: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"decoding period d must be a positive integer, got {self.d}")
        if int(self.l) != self.l or self.l < 1:
            raise ValueError(f"attempt cap l must be a positive integer, got {self.l}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie strictly inside (0, 1), got {self.epsilon}")

    @property
    def L(self) -> int:
        return self.d * self.l


@dataclass(frozen=True)
class OptimizerSettings:
    scan_points: int = 256
    margin: float = 1e-12
    xtol: float = 1e-13
    max_iter: int = 400


@dataclass(frozen=True)
class AtrBound:
    atr_nats_per_symbol: float
    alpha_star: float
    log_alpha_star: float
    log_m_star: float
    etau_cap: float
    gamma_nats: float
    feasible: bool
    clamped: bool = False
    # (C*d*l, eps), kept for the exact M
    _m_args: tuple[float, float] | None = field(default=None, repr=False, compare=False)

    @property
    def atr_bits(self) -> float:
        return self.atr_nats_per_symbol / LOG2

    @cached_property
    def m_star(self) -> int | None:
        """Exact Lemma-1 M at ``alpha_star``; evaluated on first access since it has ~C*d*l/2.3 digits."""
        if not self.feasible or self._m_args is None:
            return None
        cdl, eps = self._m_args
        return _max_m_t(cdl, eps, alpha=self.alpha_star)


def _cdl(info: ChannelInfo, p: VlfParams) -> float:
    return info.capacity_nats * p.d * p.l


def alpha_interval(info: ChannelInfo, p: VlfParams) -> tuple[float, float]:
    """Admissible range of ``t = log(1/alpha)``, i.e. ``(log(1/eps), C*d*l/2)``.

    Empty when the lower end is not below the upper end.
    """
    return -math.log(p.epsilon), _cdl(info, p) / 2.0


def is_feasible(info: ChannelInfo, p: VlfParams) -> bool:
    lo, hi = alpha_interval(info, p)
    return lo < hi


def _check_alpha(info: ChannelInfo, p: VlfParams, alpha: float) -> float:
    if not 0.0 < alpha < p.epsilon:
        raise InadmissibleAlpha(f"alpha={alpha!r} not in (exp(-Cdl/2), epsilon={p.epsilon})")
    t = -math.log(alpha)
    if not t < _cdl(info, p) / 2.0:
        raise InadmissibleAlpha(f"alpha={alpha!r} not above exp(-Cdl/2)={math.exp(-_cdl(info, p) / 2):.3e}")
    return t


def gamma_of_alpha(info: ChannelInfo, p: VlfParams, alpha: float) -> float:
    t = _check_alpha(info, p, alpha)
    return _gamma_t(_cdl(info, p), t)


def _gamma_t(cdl: float, t: float) -> float:
    return cdl - math.sqrt(2.0 * cdl * t)


def _log_eps_minus_alpha(eps: float, t: float) -> float:
    return math.log(eps) + math.log1p(-math.exp(-t) / eps)


def lemma1_log_m(info: ChannelInfo, p: VlfParams, alpha: float) -> float:
    """``log((eps - alpha) * exp(gamma(alpha)) + 1)``; the log of Lemma 1's M before flooring."""
    t = _check_alpha(info, p, alpha)
    x = _log_eps_minus_alpha(p.epsilon, t) + _gamma_t(_cdl(info, p), t)
    # log(e^x + 1), stable both ways
    return x + math.log1p(math.exp(-x)) if x > 0 else math.log1p(math.exp(x))


def lemma1_max_m(info: ChannelInfo, p: VlfParams, alpha: float) -> int:
    """Largest codebook size certified by Lemma 1 at this alpha.

    ``floor((eps - alpha) * exp(gamma(alpha)) + 1)`` as an exact integer. The
    exponent is evaluated in multiprecision sized to the result, so huge M is
    still exact; use :func:`lemma1_log_m` when only the magnitude matters.
    """
    _check_alpha(info, p, alpha)
    return _max_m_t(_cdl(info, p), p.epsilon, alpha=alpha)


def _max_m_t(cdl: float, eps: float, t: float | None = None, alpha: float | None = None) -> int:
    # exactly one of t, alpha; alpha is logged in multiprecision, not in float
    digits = max(30, int(cdl / math.log(10)) + 30)
    with mpmath.workdps(digits):
        c = mpmath.mpf(cdl)
        a = mpmath.mpf(alpha) if alpha is not None else mpmath.exp(-mpmath.mpf(t))
        tt = -mpmath.log(a)
        val = (mpmath.mpf(eps) - a) * mpmath.exp(c - mpmath.sqrt(2 * c * tt)) + 1
        return int(mpmath.floor(val))


def lemma2_etau_cap(info: ChannelInfo, p: VlfParams, alpha: float) -> float:
    """Upper bound on E[tau*] in decoding attempts: ``min((1-delta)*l + a0/C, l)``."""
    t = _check_alpha(info, p, alpha)
    return _etau_cap_t(info, p, t)


def _etau_cap_t(info: ChannelInfo, p: VlfParams, t: float) -> float:
    delta = math.sqrt(2.0 * t / _cdl(info, p))
    return min((1.0 - delta) * p.l + info.a0_nats / info.capacity_nats, float(p.l))


def theorem1_objective(info: ChannelInfo, p: VlfParams, t):
    """Theorem-1 ratio as a function of ``t = log(1/alpha)`` (scalar or array)."""
    cdl = _cdl(info, p)
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        num = math.log(p.epsilon) + np.log1p(-np.exp(-t) / p.epsilon) + cdl - np.sqrt(2.0 * cdl * t)
        cap = np.minimum((1.0 - np.sqrt(2.0 * t / cdl)) * p.l + info.a0_nats / info.capacity_nats, p.l)
        out = num / (p.d * cap)
    return out if out.ndim else float(out)


def _golden_max(f, a: float, b: float, xtol: float, max_iter: int) -> tuple[float, float]:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    e = a + invphi * (b - a)
    fc, fe = f(c), f(e)
    for _ in range(max_iter):
        if abs(b - a) <= xtol * max(1.0, abs(a) + abs(b)):
            break
        if fc >= fe:
            b, e, fe = e, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, e, fe
            e = a + invphi * (b - a)
            fe = f(e)
    return (c, fc) if fc >= fe else (e, fe)


def _infeasible() -> AtrBound:
    nan = math.nan
    return AtrBound(0.0, nan, nan, nan, nan, nan, feasible=False)


def theorem1_atr(info: ChannelInfo, p: VlfParams, opt: OptimizerSettings | None = None) -> AtrBound:
    """Theorem-1 lower bound on the maximum ATR, maximised over alpha.

    The scan covers the admissible ``t`` interval twice: uniformly (log-spaced
    in alpha) and geometrically towards the ``alpha -> eps`` end, where the
    objective falls off steeply. A golden-section search then refines the best
    bracket, and the kink of the ``min`` in the denominator is tried directly.
    """
    opt = opt or OptimizerSettings()
    if info.capacity_nats <= 0.0:
        return _infeasible()
    lo, hi = alpha_interval(info, p)
    if not lo < hi:
        return _infeasible()
    width = hi - lo
    a = lo + opt.margin * max(width, abs(lo))
    b = hi - opt.margin * max(width, abs(hi))
    if not a < b:
        return _infeasible()

    n = max(opt.scan_points // 2, 3)
    grid = np.unique(np.concatenate([
        np.linspace(a, b, n),
        a + np.geomspace(max(opt.margin * width, 1e-300), b - a, n),
    ]))
    grid = grid[(grid >= a) & (grid <= b)]
    vals = theorem1_objective(info, p, grid)
    vals = np.where(np.isnan(vals), -np.inf, vals)
    i = int(np.argmax(vals))
    left = grid[max(i - 1, 0)]
    right = grid[min(i + 1, grid.size - 1)]

    f = lambda t: float(theorem1_objective(info, p, t))  # noqa: E731
    best_t, best_v = _golden_max(f, left, right, opt.xtol, opt.max_iter)
    if vals[i] > best_v:
        best_t, best_v = float(grid[i]), float(vals[i])
    # point where (1 - delta) * l + a0/C == l
    kink = p.d * info.a0_nats ** 2 / (2.0 * info.capacity_nats * p.l)
    if a < kink < b:
        kv = f(kink)
        if kv > best_v:
            best_t, best_v = kink, kv

    cdl = _cdl(info, p)
    alpha = math.exp(-best_t)
    log_m = _log_eps_minus_alpha(p.epsilon, best_t) + _gamma_t(cdl, best_t)
    log_m = log_m + math.log1p(math.exp(-log_m)) if log_m > 0 else math.log1p(math.exp(log_m))
    atr = min(max(best_v, 0.0), info.capacity_nats)
    return AtrBound(
        atr_nats_per_symbol=atr,
        alpha_star=alpha,
        log_alpha_star=float(-best_t),
        log_m_star=log_m,
        etau_cap=_etau_cap_t(info, p, best_t),
        gamma_nats=_gamma_t(cdl, best_t),
        feasible=True,
        clamped=atr != best_v,
        _m_args=(cdl, p.epsilon),
    )


def approx_atr(info: ChannelInfo, p: VlfParams) -> float:
    """Large-L approximation ``C - (d*a0 - log(eps/2)) / L``. May be negative for small L."""
    return info.capacity_nats - (p.d * info.a0_nats - math.log(0.5 * p.epsilon)) / p.L


def theorem2_gap_bound(info: ChannelInfo, p: VlfParams, c0: float = 0.9) -> float:
    """Explicit bound ``(d*a0 - log(eps/2)) / (l*d*c0)`` on capacity minus the maximum ATR.

    Valid only once :func:`theorem2_premise` holds for the same ``c0``.
    """
    if not 0.0 < c0 <= 1.0:
        raise ValueError("c0 must be in (0, 1]")
    return (p.d * info.a0_nats - math.log(0.5 * p.epsilon)) / (p.l * p.d * c0)


def theorem2_premise(info: ChannelInfo, p: VlfParams, c0: float = 0.9) -> bool:
    """Whether alpha = eps/2 is admissible and the denominator ratio exceeds ``c0``."""
    C, d, l, eps = info.capacity_nats, p.d, p.l, p.epsilon
    t = math.log(2.0 / eps)
    if not t < C * d * l / 2.0:
        return False
    if not math.exp(-d * info.a0_nats ** 2 / (2.0 * C * l)) > eps / 2.0:
        return False
    ratio = (d * l - math.sqrt(2.0 * d * l * t / C) + d * info.a0_nats / C) / l
    return ratio > c0 * d


_STD_NORMAL = NormalDist()


def q_inv(eps: float) -> float:
    """Inverse of the standard normal tail probability Q."""
    return -_STD_NORMAL.inv_cdf(eps)


def nonfeedback_rate(info: ChannelInfo, n: int, epsilon: float) -> float:
    """Normal approximation for fixed-length codes without feedback, clamped at 0."""
    if n < 1:
        raise ValueError("blocklength must be at least 1")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    r = info.capacity_nats - math.sqrt(info.dispersion_nats2 / n) * q_inv(epsilon) + math.log(n) / (2.0 * n)
    return max(r, 0.0)


@dataclass(frozen=True)
class SweepRow:
    L: int
    d: int
    l: int
    atr_vlf: float | None
    atr_approx: float
    atr_nofb: float
    alpha_star: float | None
    feasible: bool


@dataclass(frozen=True)
class SweepTable:
    epsilon: float
    unit: str
    rows: tuple[SweepRow, ...]

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.rows]


def sweep(info: ChannelInfo, epsilon: float, d: int, l_values, unit: str = "bits",
          opt: OptimizerSettings | None = None) -> SweepTable:
    """Evaluate the VLF bound, its approximation and the baseline at ``n = L`` for each ``l``."""
    l_values = [int(v) for v in l_values]
    if not l_values:
        raise ValueError("l_values must be non-empty")
    if any(b <= a for a, b in zip(l_values, l_values[1:])):
        raise ValueError("l_values must be strictly increasing")
    if unit not in ("bits", "nats"):
        raise ValueError(f"unknown unit {unit!r}")
    scale = 1.0 / LOG2 if unit == "bits" else 1.0
    rows = []
    for l in l_values:
        p = VlfParams(d=d, l=l, epsilon=epsilon)
        b = theorem1_atr(info, p, opt)
        rows.append(SweepRow(
            L=p.L,
            d=d,
            l=l,
            atr_vlf=b.atr_nats_per_symbol * scale if b.feasible else None,
            atr_approx=approx_atr(info, p) * scale,
            atr_nofb=nonfeedback_rate(info, p.L, epsilon) * scale,
            alpha_star=b.alpha_star if b.feasible else None,
            feasible=b.feasible,
        ))
    return SweepTable(epsilon=epsilon, unit=unit, rows=tuple(rows))


def crossings(table: SweepTable) -> list[tuple[int, int]]:
    """Adjacent-row brackets ``(L_before, L_after)`` where the VLF bound overtakes the baseline."""
    out = []
    prev = None
    for r in table.rows:
        diff = None if r.atr_vlf is None else r.atr_vlf - r.atr_nofb
        if prev is not None and diff is not None and prev[1] <= 0.0 < diff:
            out.append((prev[0], r.L))
        prev = (r.L, diff) if diff is not None else (r.L, -math.inf)
    return out
