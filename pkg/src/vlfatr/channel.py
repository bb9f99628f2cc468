"""Discrete memoryless channels and their per-symbol information quantities.

Everything here is in nats. Conversion to bits happens only at presentation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

LOG2 = math.log(2.0)

# Stand-in for log(0): a symbol pair that can never occur under the true input.
NEG_INF = -math.inf

_SUM_TOL = 1e-12


class ChannelError(ValueError):
    """Raised for malformed channels or channel files."""


@dataclass(frozen=True, eq=False)
class Channel:
    transition: np.ndarray
    input_dist: np.ndarray
    output_dist: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w = np.array(self.transition, dtype=float)
        p = np.array(self.input_dist, dtype=float)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise ChannelError(f"transition must be a non-empty matrix, got shape {w.shape}")
        if p.shape != (w.shape[0],):
            raise ChannelError(f"input_dist has shape {p.shape}, expected ({w.shape[0]},)")
        if np.any(~np.isfinite(w)) or np.any(w < 0) or np.any(w > 1):
            raise ChannelError("transition entries must lie in [0, 1]")
        bad = np.abs(w.sum(axis=1) - 1.0) > _SUM_TOL
        if np.any(bad):
            raise ChannelError(f"transition rows {np.flatnonzero(bad).tolist()} do not sum to 1")
        if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
            raise ChannelError("input_dist entries must lie in [0, 1]")
        if abs(p.sum() - 1.0) > _SUM_TOL:
            raise ChannelError(f"input_dist sums to {p.sum()!r}, not 1")
        q = p @ w
        if abs(q.sum() - 1.0) > _SUM_TOL:
            raise ChannelError("output marginal does not sum to 1")
        w.setflags(write=False)
        p.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "transition", w)
        object.__setattr__(self, "input_dist", p)
        object.__setattr__(self, "output_dist", q)

    @property
    def input_size(self) -> int:
        return self.transition.shape[0]

    @property
    def output_size(self) -> int:
        return self.transition.shape[1]

    def with_input_dist(self, input_dist) -> Channel:
        return replace(self, input_dist=input_dist)

    def density_table(self) -> np.ndarray:
        """Matrix of i(x;y) in nats, ``-inf`` where P(y|x) = 0.

        Columns with P_Y(y) = 0 are unreachable and also set to ``-inf``.
        """
        w = self.transition
        q = self.output_dist
        out = np.full(w.shape, NEG_INF)
        ok = (w > 0) & (q[None, :] > 0)
        out[ok] = np.log(w[ok] / np.broadcast_to(q, w.shape)[ok])
        return out


@dataclass(frozen=True)
class ChannelInfo:
    capacity_nats: float
    a0_nats: float
    dispersion_nats2: float

    @property
    def capacity_bits(self) -> float:
        return self.capacity_nats / LOG2


def make_bsc(q: float) -> Channel:
    """Binary symmetric channel with crossover ``q`` and uniform input."""
    if not 0.0 <= q <= 0.5:
        raise ChannelError(f"crossover probability must be in [0, 0.5], got {q}")
    return Channel(np.array([[1.0 - q, q], [q, 1.0 - q]]), np.array([0.5, 0.5]))


def make_bec(p: float) -> Channel:
    """Binary erasure channel; outputs are (0, erasure, 1)."""
    if not 0.0 <= p <= 1.0:
        raise ChannelError(f"erasure probability must be in [0, 1], got {p}")
    return Channel(np.array([[1.0 - p, p, 0.0], [0.0, p, 1.0 - p]]), np.array([0.5, 0.5]))


def info_density(ch: Channel, x: int, y: int) -> float:
    """Per-symbol information density log(P(y|x) / P_Y(y)) in nats.

    Returns ``-inf`` when P(y|x) = 0 but y is reachable. An output that is
    unreachable under the input distribution is a domain error.
    """
    if not (0 <= x < ch.input_size and 0 <= y < ch.output_size):
        raise ChannelError(f"symbol pair ({x}, {y}) outside the alphabets")
    py = ch.output_dist[y]
    if py <= 0.0:
        raise ChannelError(f"output symbol {y} has zero probability; density undefined")
    pyx = ch.transition[x, y]
    if pyx == 0.0:
        return NEG_INF
    return math.log(pyx / py)


def sequence_info_density(ch: Channel, xs, ys) -> float:
    """Information density of a pair of equal-length symbol sequences."""
    xs = np.asarray(xs, dtype=np.intp)
    ys = np.asarray(ys, dtype=np.intp)
    if xs.shape != ys.shape:
        raise ChannelError("sequences differ in length")
    if np.any(ch.output_dist[ys] <= 0.0):
        raise ChannelError("sequence contains an unreachable output symbol")
    return float(np.sum(ch.density_table()[xs, ys]))


def channel_info(ch: Channel) -> ChannelInfo:
    """Mean (capacity under ``input_dist``), max and variance of i(X;Y)."""
    dens = ch.density_table()
    joint = ch.input_dist[:, None] * ch.transition
    support = joint > 0
    vals = dens[support]
    probs = joint[support]
    mean = float(np.sum(probs * vals))
    var = float(np.sum(probs * (vals - mean) ** 2))
    return ChannelInfo(capacity_nats=max(mean, 0.0), a0_nats=float(vals.max()), dispersion_nats2=max(var, 0.0))


def mutual_information(ch: Channel) -> float:
    return channel_info(ch).capacity_nats


class ConvergenceError(RuntimeError):
    def __init__(self, msg: str, gap: float):
        super().__init__(f"{msg} (residual gap {gap:.3e} nats)")
        self.gap = gap


def optimize_input_dist(ch: Channel, tol: float = 1e-10, max_iter: int = 100_000) -> Channel:
    """Replace ``input_dist`` with a capacity-achieving distribution.

    Blahut-Arimoto iteration. Each step brackets capacity between I(p) and
    max_x D(W(.|x) || pW); the loop stops once that bracket is below ``tol``.
    Raises :class:`ConvergenceError` carrying the residual gap if it never is.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    w = ch.transition
    logw = np.where(w > 0, np.log(np.where(w > 0, w, 1.0)), 0.0)
    p = np.full(ch.input_size, 1.0 / ch.input_size)
    gap = math.inf
    for _ in range(max_iter):
        q = p @ w
        logq = np.log(np.where(q > 0, q, 1.0))
        # D(W(.|x) || q) for each x
        div = np.sum(w * (logw - logq[None, :]), axis=1)
        lower = float(p @ div)
        upper = float(div.max())
        gap = upper - lower
        if gap < tol:
            break
        p = p * np.exp(div - upper)
        p /= p.sum()
    else:
        raise ConvergenceError(f"Blahut-Arimoto did not reach tol={tol} after {max_iter} iterations", gap)
    return ch.with_input_dist(p / p.sum())


def competitor_law(ch: Channel, atol: float = 1e-12):
    """Law of i(X';y) for an input X' ~ P_X drawn independently of y.

    Returns ``(values, probs)`` with ``-inf`` merged into a single entry, if the
    law is the same for every reachable output y. Returns ``None`` otherwise.
    """
    dens = ch.density_table()
    laws = []
    for y in np.flatnonzero(ch.output_dist > 0):
        acc: dict[float, float] = {}
        for x in range(ch.input_size):
            px = ch.input_dist[x]
            if px == 0:
                continue
            v = float(dens[x, y])
            acc[v] = acc.get(v, 0.0) + px
        laws.append(sorted(acc.items()))
    first = laws[0]
    for law in laws[1:]:
        if len(law) != len(first):
            return None
        for (v1, p1), (v2, p2) in zip(first, law):
            same_v = (v1 == v2) or (math.isfinite(v1) and math.isfinite(v2) and abs(v1 - v2) <= atol)
            if not same_v or abs(p1 - p2) > atol:
                return None
    values = np.array([v for v, _ in first])
    probs = np.array([p for _, p in first])
    return values, probs


def parse_channel(text: str) -> Channel:
    """Parse the text channel format.

    First data line ``nx ny``; then ``nx`` rows of ``ny`` probabilities;
    optionally a final line ``input p_1 ... p_nx``. ``#`` starts a comment line.
    Without an ``input`` line the input distribution is uniform.
    """
    return parse_channel_ex(text)[0]


def parse_channel_ex(text: str) -> tuple[Channel, bool]:
    """Like :func:`parse_channel`, also reporting whether an ``input`` line was present."""
    lines = []
    for raw in text.splitlines():
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        lines.append(s.split())
    if not lines:
        raise ChannelError("empty channel file")
    try:
        nx, ny = (int(t) for t in lines[0])
    except ValueError as exc:
        raise ChannelError(f"bad header line {' '.join(lines[0])!r}; expected '<inputs> <outputs>'") from exc
    if nx < 1 or ny < 1:
        raise ChannelError("alphabet sizes must be positive")
    body = lines[1:]
    if len(body) < nx:
        raise ChannelError(f"expected {nx} transition rows, found {len(body)}")
    try:
        rows = [[float(t) for t in r] for r in body[:nx]]
    except ValueError as exc:
        raise ChannelError(f"non-numeric transition entry: {exc}") from exc
    for i, r in enumerate(rows):
        if len(r) != ny:
            raise ChannelError(f"row {i} has {len(r)} entries, expected {ny}")
    rest = body[nx:]
    if not rest:
        input_dist = np.full(nx, 1.0 / nx)
    elif len(rest) == 1 and rest[0][0] == "input":
        try:
            input_dist = np.array([float(t) for t in rest[0][1:]])
        except ValueError as exc:
            raise ChannelError(f"non-numeric input probability: {exc}") from exc
        if input_dist.shape != (nx,):
            raise ChannelError(f"input line has {input_dist.size} entries, expected {nx}")
    else:
        raise ChannelError("unexpected trailing lines after the transition matrix")
    return Channel(np.array(rows), input_dist), bool(rest)


def load_channel(path) -> Channel:
    return parse_channel(Path(path).read_text())


def format_channel(ch: Channel) -> str:
    out = [f"{ch.input_size} {ch.output_size}"]
    for row in ch.transition:
        out.append(" ".join(repr(float(v)) for v in row))
    out.append("input " + " ".join(repr(float(v)) for v in ch.input_dist))
    return "\n".join(out) + "\n"
