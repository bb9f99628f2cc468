"""Monte Carlo simulation of the random-coding VLF scheme.

Each trial draws a fresh i.i.d. codebook of ``m`` codewords of length ``d*l``,
sends one of them through the channel and runs the periodic
information-density decoder: codeword ``j`` stops at the first attempt ``k``
with ``S_{j,k} >= gamma``; the decision time is the earliest stop (capped at
``l``) and ties go to the largest index. If nothing stops by attempt ``l``
the decoder outputs ``m``.

Two engines produce trials with the same law:

``explicit``
    draws every codeword symbol. Cost grows with ``m``.
``collapsed``
    draws only the transmitted codeword and the channel noise. Given the
    output, the other ``m - 1`` codewords stop independently with a law that
    does not depend on the output when the channel is output-symmetric under
    ``P_X`` (BSC with uniform input, for instance). That law is computed
    exactly once, and the earliest competitor and its index are sampled from
    it directly, which makes codebooks of size ``1e15`` cheap.

Random numbers come from counter-based streams keyed by ``(seed, trial,
role)``, so any trial can be replayed on its own and results do not depend on
how trials are split across threads.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from statistics import NormalDist

import numpy as np

from . import _backend
from .channel import Channel, competitor_law

CHUNK = 4096
EXPLICIT_MAX_M = 64
MAX_M = 2 ** 62
STATE_CAP = 5_000_000
ENUM_CAP = 10 ** 8

_Z95 = NormalDist().inv_cdf(0.975)


class MessageMode(str, Enum):
    UNIFORM = "uniform_w"
    FIXED_W1 = "fixed_w1"


class SimulationError(ValueError):
    pass


def threshold(gamma: float) -> float:
    """Effective crossing level: ``gamma`` less a relative 1e-12 slack.

    Sums of lattice-valued densities (``3*log 2`` built by three additions, say)
    then cross a threshold placed exactly on the lattice regardless of the
    order they were summed in.
    """
    return gamma - 1e-12 * max(1.0, abs(gamma))


@dataclass(frozen=True)
class SimConfig:
    channel: Channel
    m: int
    d: int
    l: int
    gamma_nats: float
    trials: int
    seed: int = 0
    message_mode: MessageMode = MessageMode.UNIFORM
    engine: str = "auto"

    def __post_init__(self):
        if self.m < 1 or self.m > MAX_M:
            raise SimulationError(f"m must be in [1, 2**62], got {self.m}")
        if self.d < 1 or self.l < 1:
            raise SimulationError("d and l must be positive")
        if self.trials < 1:
            raise SimulationError("trials must be at least 1")
        if not math.isfinite(self.gamma_nats):
            raise SimulationError("gamma_nats must be finite")
        if not 0 <= self.seed < 2 ** 64:
            raise SimulationError("seed must fit in 64 unsigned bits")
        if self.engine not in ("auto", "explicit", "collapsed"):
            raise SimulationError(f"unknown engine {self.engine!r}")
        object.__setattr__(self, "message_mode", MessageMode(self.message_mode))
        object.__setattr__(self, "m", int(self.m))

    @property
    def L(self) -> int:
        return self.d * self.l


@dataclass(frozen=True)
class TrialOutcome:
    w: int
    w_hat: int
    tau_star: int
    tau_true: int
    tau_competitor: int

    @property
    def error(self) -> bool:
        return self.w != self.w_hat


@dataclass(frozen=True)
class SimStats:
    trials: int
    errors: int
    error_rate: float
    error_ci95: tuple[float, float]
    mean_tau_star: float
    tau_star_se: float
    atr_estimate: float
    p_no_detect: float
    p_true_miss: float
    p_competitor_first: float
    p_pairwise: float | None = None
    engine: str = ""
    backend: str = ""

    @property
    def error_upper95(self) -> float:
        return self.error_ci95[1]

    def binomial_se(self, p: float) -> float:
        return math.sqrt(max(p * (1.0 - p), 0.0) / self.trials)


def wilson_interval(k: int, n: int, z: float = _Z95) -> tuple[float, float]:
    if n <= 0:
        raise ValueError("n must be positive")
    p = k / n
    z2 = z * z
    denom = 1.0 + z2 / n
    centre = (p + z2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class StopLaw:
    """Stopping-attempt law of one codeword drawn independently of the output."""

    pmf: np.ndarray  # P(stop at k), k = 1..l
    log_surv: np.ndarray  # log P(stop later than k), k = 1..l, then -inf
    cond_eq: np.ndarray  # P(stop at k | not stopped before k), k = 1..l

    @property
    def p_never(self) -> float:
        return max(0.0, 1.0 - float(self.pmf.sum()))


def competitor_stop_law(ch: Channel, d: int, l: int, gamma: float) -> StopLaw:
    """Exact law by dynamic programming over per-value counts.

    Requires :func:`~vlfatr.channel.competitor_law` to be output-independent.
    The state is the vector of how many times each distinct finite density
    value has occurred; codewords that hit a ``-inf`` density are dropped.
    """
    law = competitor_law(ch)
    if law is None:
        raise SimulationError("competitor density law depends on the output; use the explicit engine")
    values, probs = law
    finite = np.isfinite(values)
    vf = values[finite]
    pf = probs[finite]
    r = vf.size
    L = d * l
    radix = L + 1
    if radix ** max(r, 1) >= 2 ** 62:
        raise SimulationError("too many distinct density values for the count-vector state")
    weights = radix ** np.arange(r, dtype=np.int64)
    thr = threshold(gamma)

    codes = np.zeros(1, dtype=np.int64)
    p = np.ones(1)
    pmf = np.zeros(l)
    surv_direct = np.zeros(l)
    dead = 0.0
    for n in range(1, L + 1):
        alive = p.sum()
        dead += alive * (1.0 - pf.sum())
        if codes.size:
            new_codes = np.concatenate([codes + weights[c] for c in range(r)])
            new_p = np.concatenate([p * pf[c] for c in range(r)])
            codes, inv = np.unique(new_codes, return_inverse=True)
            p = np.bincount(inv.ravel(), weights=new_p, minlength=codes.size)
        if codes.size > STATE_CAP:
            raise SimulationError("competitor stopping law needs too many states")
        if n % d == 0:
            k = n // d
            counts = (codes[:, None] // weights[None, :]) % radix
            s = counts @ vf
            stop = s >= thr
            pmf[k - 1] = p[stop].sum()
            codes, p = codes[~stop], p[~stop]
            surv_direct[k - 1] = p.sum() + dead

    cdf = np.cumsum(pmf)
    with np.errstate(divide="ignore"):
        log_surv = np.where(cdf < 0.5, np.log1p(-np.minimum(cdf, 1.0)), np.log(surv_direct))
    prev_surv = np.concatenate([[1.0], np.where(cdf < 0.5, 1.0 - cdf, surv_direct)[:-1]])
    with np.errstate(divide="ignore", invalid="ignore"):
        cond_eq = np.where(prev_surv > 0, pmf / prev_surv, 1.0)
    cond_eq = np.clip(cond_eq, 0.0, 1.0)
    return StopLaw(pmf=pmf, log_surv=np.append(log_surv, -np.inf), cond_eq=cond_eq)


def resolve_engine(cfg: SimConfig) -> str:
    if cfg.engine != "auto":
        return cfg.engine
    if cfg.m <= EXPLICIT_MAX_M:
        return "explicit"
    if competitor_law(cfg.channel) is None:
        raise SimulationError(
            f"m={cfg.m} is too large for explicit simulation and the channel is not output-symmetric"
        )
    return "collapsed"


@dataclass
class _Prepared:
    cfg: SimConfig
    engine: str
    kernels: object
    px_cum: np.ndarray
    w_cum: np.ndarray
    dens: np.ndarray
    thr: float
    law: StopLaw | None = None

    def run(self, trials: np.ndarray):
        c = self.cfg
        args = (trials, np.uint64(c.seed), c.m, c.d, c.l, self.thr,
                c.message_mode is MessageMode.FIXED_W1, self.px_cum, self.w_cum, self.dens)
        if self.engine == "explicit":
            return self.kernels.explicit_block(*args)
        return self.kernels.collapsed_block(*args, self.law.log_surv, self.law.cond_eq)


def _prepare(cfg: SimConfig, backend: str | None) -> _Prepared:
    engine = resolve_engine(cfg)
    ch = cfg.channel
    px_cum = np.ascontiguousarray(np.cumsum(ch.input_dist), dtype=np.float64)
    w_cum = np.ascontiguousarray(np.cumsum(ch.transition, axis=1), dtype=np.float64)
    dens = np.ascontiguousarray(ch.density_table(), dtype=np.float64)
    prep = _Prepared(cfg, engine, _backend.get(backend), px_cum, w_cum, dens, threshold(cfg.gamma_nats))
    if engine == "collapsed":
        prep.law = competitor_stop_law(ch, cfg.d, cfg.l, cfg.gamma_nats)
    return prep


def run_trial(cfg: SimConfig, trial: int = 0, backend: str | None = None) -> TrialOutcome:
    """Run the single trial with index ``trial`` of ``cfg``'s random stream."""
    prep = _prepare(cfg, backend)
    out = prep.run(np.array([trial], dtype=np.int64))
    return TrialOutcome(*(int(a[0]) for a in out))


@dataclass
class _Tally:
    n: int = 0
    errors: int = 0
    tau_sum: int = 0
    tau_sq: int = 0
    no_detect: int = 0
    true_miss: int = 0
    comp_first: int = 0

    def add(self, other: _Tally) -> None:
        for f in self.__dataclass_fields__:
            setattr(self, f, getattr(self, f) + getattr(other, f))


def _tally(out, l: int) -> _Tally:
    w, what, tstar, tw, tc = out
    return _Tally(
        n=int(w.size),
        errors=int(np.count_nonzero(w != what)),
        tau_sum=int(tstar.sum()),
        tau_sq=int(np.sum(tstar.astype(np.int64) ** 2)),
        no_detect=int(np.count_nonzero((tw > l) & (tc > l))),
        true_miss=int(np.count_nonzero(tw > l)),
        comp_first=int(np.count_nonzero((tc <= l) & (tc <= tw))),
    )


def _simulate(cfg: SimConfig, workers: int, backend: str | None) -> tuple[_Tally, _Prepared]:
    prep = _prepare(cfg, backend)
    blocks = [np.arange(s, min(s + CHUNK, cfg.trials), dtype=np.int64) for s in range(0, cfg.trials, CHUNK)]
    job = lambda b: _tally(prep.run(b), cfg.l)  # noqa: E731
    total = _Tally()
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, blocks))
    else:
        parts = [job(b) for b in blocks]
    # integer tallies: the sum is exact whatever the completion order
    for part in parts:
        total.add(part)
    return total, prep


def _stats(t: _Tally, prep: _Prepared, pairwise: bool) -> SimStats:
    cfg = prep.cfg
    n = t.n
    mean = t.tau_sum / n
    if n > 1:
        var = max(t.tau_sq - t.tau_sum * t.tau_sum / n, 0.0) / (n - 1)
        se = math.sqrt(var / n)
    else:
        se = math.nan
    return SimStats(
        trials=n,
        errors=t.errors,
        error_rate=t.errors / n,
        error_ci95=wilson_interval(t.errors, n),
        mean_tau_star=mean,
        tau_star_se=se,
        atr_estimate=math.log(cfg.m) / (cfg.d * mean),
        p_no_detect=t.no_detect / n,
        p_true_miss=t.true_miss / n,
        p_competitor_first=t.comp_first / n,
        p_pairwise=t.comp_first / n if pairwise else None,
        engine=prep.engine,
        backend="python" if prep.kernels is _backend.python else "compiled",
    )


def run_sim(cfg: SimConfig, workers: int = 1, backend: str | None = None) -> SimStats:
    """Aggregate ``cfg.trials`` trials. The result depends on ``cfg`` only."""
    t, prep = _simulate(cfg, workers, backend)
    return _stats(t, prep, pairwise=False)


def run_pairwise(cfg: SimConfig, workers: int = 1, backend: str | None = None) -> SimStats:
    """Two-codeword run for the pairwise and no-detection probabilities.

    Codeword 1 is sent; codeword 2 is an independent draw scored against the
    same output. ``p_pairwise`` estimates ``P[tau_bar <= tau, tau_bar <= l]``
    (the competitor stops inside the horizon no later than the true codeword)
    and ``p_true_miss`` estimates ``P[tau > l]``.
    """
    if cfg.m != 2:
        raise SimulationError("pairwise runs need m = 2")
    cfg2 = SimConfig(cfg.channel, 2, cfg.d, cfg.l, cfg.gamma_nats, cfg.trials, cfg.seed,
                     MessageMode.FIXED_W1, "explicit")
    t, prep = _simulate(cfg2, workers, backend)
    return _stats(t, prep, pairwise=True)


@dataclass(frozen=True)
class ExactResult:
    error_prob: float
    mean_tau_star: float
    p_no_detect: float
    tau_pmf: tuple[float, ...] = field(default=())


def exact_enumerate(cfg: SimConfig) -> ExactResult:
    """Exact error probability and E[tau*] by enumerating every codebook and output.

    Sums over all ``|A|^(m*d*l)`` codebooks, ``|B|^(d*l)`` outputs and every
    message, weighting each by its probability. Only for tiny instances.
    """
    ch = cfg.channel
    L = cfg.L
    nx, ny = ch.input_size, ch.output_size
    size = nx ** (cfg.m * L) * ny ** L
    if size > ENUM_CAP:
        raise SimulationError(f"instance has {size} codebook/output combinations; limit is {ENUM_CAP}")
    px = ch.input_dist.tolist()
    W = ch.transition.tolist()
    py = ch.output_dist.tolist()
    thr = threshold(cfg.gamma_nats)
    messages = [1] if cfg.message_mode is MessageMode.FIXED_W1 else list(range(1, cfg.m + 1))

    def dens(x, y):
        if W[x][y] == 0.0:
            return -math.inf
        return math.log(W[x][y] / py[y])

    def stop_time(word, ys):
        s = 0.0
        for n in range(L):
            s += dens(word[n], ys[n])
            if (n + 1) % cfg.d == 0 and s >= thr:
                return (n + 1) // cfg.d
        return cfg.l + 1

    err = 0.0
    etau = 0.0
    nodet = 0.0
    tau_pmf = [0.0] * cfg.l
    for flat in itertools.product(range(nx), repeat=cfg.m * L):
        pc = 1.0
        for x in flat:
            pc *= px[x]
        if pc == 0.0:
            continue
        words = [flat[j * L:(j + 1) * L] for j in range(cfg.m)]
        for ys in itertools.product(range(ny), repeat=L):
            taus = [stop_time(wd, ys) for wd in words]
            first = min(taus)
            if first <= cfg.l:
                decided = max(j + 1 for j, t in enumerate(taus) if t == first)
                tstar = first
            else:
                decided = cfg.m
                tstar = cfg.l
            for wmsg in messages:
                pw = 1.0 / len(messages)
                py_given = 1.0
                for n in range(L):
                    py_given *= W[words[wmsg - 1][n]][ys[n]]
                prob = pc * pw * py_given
                if prob == 0.0:
                    continue
                if decided != wmsg:
                    err += prob
                etau += prob * tstar
                tau_pmf[tstar - 1] += prob
                if first > cfg.l:
                    nodet += prob
    return ExactResult(error_prob=float(err), mean_tau_star=float(etau), p_no_detect=float(nodet),
                       tau_pmf=tuple(float(v) for v in tau_pmf))
