"""Acceptance criteria 1 to 11, one test each.

The conftest summary hook prints one PASS/FAIL line per criterion.
"""

import io
import math
import time

import numpy as np
import pytest

from test_bounds import grid_max
from vlfatr.bounds import (
    VlfParams,
    approx_atr,
    lemma2_etau_cap,
    nonfeedback_rate,
    theorem1_atr,
)
from vlfatr.channel import LOG2, channel_info, make_bsc
from vlfatr.cli import main
from vlfatr.sim import SimConfig, exact_enumerate, run_pairwise, run_sim

BSC = make_bsc(0.11)
INFO = channel_info(BSC)
C = INFO.capacity_nats
A0 = INFO.a0_nats


def vlf_bits(d, l, eps):
    return theorem1_atr(INFO, VlfParams(d=d, l=l, epsilon=eps)).atr_bits


def test_criterion_01_capacity():
    t0 = time.perf_counter()
    cap = channel_info(make_bsc(0.11)).capacity_bits
    assert time.perf_counter() - t0 < 1.0
    assert abs(cap - 0.5) <= 1e-3


def test_criterion_02_ninety_percent_crossover():
    t0 = time.perf_counter()
    assert vlf_bits(1, 360, 1e-3) >= 0.45
    first = next(L for L in range(1, 2000) if vlf_bits(1, L, 1e-3) >= 0.45)
    assert time.perf_counter() - t0 < 10.0
    assert 300 <= first <= 420, first


def test_criterion_03_nonfeedback_blocklength():
    first = next(n for n in range(1, 10**5) if nonfeedback_rate(INFO, n, 1e-3) / LOG2 >= 0.45)
    assert 2800 <= first <= 3400, first


def _crossing(d, eps=1e-3, l_max=None):
    """Largest L on the unit l grid where the VLF bound moves above the baseline."""
    l_max = l_max or 3000 // d
    above = [vlf_bits(d, l, eps) > nonfeedback_rate(INFO, d * l, eps) / LOG2 for l in range(1, l_max + 1)]
    ups = [l + 1 for l in range(1, l_max) if not above[l - 1] and above[l]]
    assert ups, f"no crossing for d={d}"
    return d * ups[-1]


def test_criterion_04_crossings():
    t0 = time.perf_counter()
    got = {d: _crossing(d) for d in (1, 50, 100)}
    assert time.perf_counter() - t0 < 60.0
    for d, target in ((1, 120), (50, 450), (100, 1200)):
        assert 0.8 * target <= got[d] <= 1.2 * target, (d, got[d])


def test_criterion_05_approximation_closeness():
    Ls = sorted(set(range(2000, 3001)) | set(np.unique(np.geomspace(2000, 10**6, 400).astype(int)).tolist()))

    def gap(L):
        p = VlfParams(d=1, l=L, epsilon=1e-3)
        return abs(approx_atr(INFO, p) - theorem1_atr(INFO, p).atr_nats_per_symbol) / LOG2

    worst = max(gap(L) for L in Ls)
    assert worst <= 0.02, worst
    assert gap(10**4) < gap(10**3)


def test_criterion_06_theorem2_scaling():
    t0 = time.perf_counter()
    eps = 1e-3
    bound = (A0 - math.log(0.5 * eps)) / 0.9
    scaled = {}
    for l in (10**2, 10**3, 10**4, 10**5):
        scaled[l] = l * (C - theorem1_atr(INFO, VlfParams(d=1, l=l, epsilon=eps)).atr_nats_per_symbol)
    assert time.perf_counter() - t0 < 60.0
    assert scaled[10**3] >= scaled[10**4] >= scaled[10**5], scaled
    over = {l: v for l, v in scaled.items() if v > bound}
    assert not over, f"L*(C - ATR) exceeds {bound:.4f} nats at {over}"


@pytest.fixture(scope="module")
def operating_point():
    p = VlfParams(d=5, l=40, epsilon=1e-2)
    return p, theorem1_atr(INFO, p)


def test_criterion_07_lemmas_by_simulation(operating_point):
    p, b = operating_point
    t0 = time.perf_counter()
    st = run_sim(SimConfig(BSC, b.m_star, p.d, p.l, b.gamma_nats, 100_000, seed=0))
    assert time.perf_counter() - t0 < 300.0
    assert st.error_upper95 <= p.epsilon, st.error_ci95
    cap = lemma2_etau_cap(INFO, p, b.alpha_star)
    assert st.mean_tau_star <= cap + 3 * st.tau_star_se, (st.mean_tau_star, cap)


def test_criterion_08_intermediate_bounds(operating_point):
    p, b = operating_point
    n = 10**6
    t0 = time.perf_counter()
    st = run_pairwise(SimConfig(BSC, 2, p.d, p.l, b.gamma_nats, n, seed=0), workers=4)
    assert time.perf_counter() - t0 < 300.0

    def sigma(q):
        return math.sqrt(q * (1 - q) / n)

    detect = math.exp(-b.gamma_nats)
    assert st.p_pairwise <= detect + 3 * sigma(detect)
    delta = math.sqrt(2 * -b.log_alpha_star / (C * p.L))
    miss = math.exp(-delta**2 * C * p.L / 2)
    assert miss == pytest.approx(b.alpha_star, rel=1e-9)
    assert st.p_true_miss <= miss + 3 * sigma(miss)


@pytest.mark.parametrize("gamma", [0.3, 0.7, 10.0])
def test_criterion_09_oracle_equivalence(gamma):
    n = 10**6
    cfg = SimConfig(BSC, 2, 1, 2, gamma, n, seed=1)
    t0 = time.perf_counter()
    ex = exact_enumerate(cfg)
    st = run_sim(cfg, workers=4)
    assert time.perf_counter() - t0 < 120.0
    se_err = math.sqrt(ex.error_prob * (1 - ex.error_prob) / n)
    var_tau = sum(q * (k + 1) ** 2 for k, q in enumerate(ex.tau_pmf)) - ex.mean_tau_star**2
    se_tau = math.sqrt(max(var_tau, 0.0) / n)
    assert abs(st.error_rate - ex.error_prob) <= 4 * se_err + 1e-12
    assert abs(st.mean_tau_star - ex.mean_tau_star) <= 4 * se_tau + 1e-12


def test_criterion_10_optimizer_correctness():
    rng = np.random.default_rng(20240601)
    t0 = time.perf_counter()
    checked = 0
    while checked < 20:
        q = rng.uniform(0.01, 0.3)
        eps = 10 ** rng.uniform(-6, -1)
        d = int(rng.choice([1, 2, 5, 10, 50, 100]))
        l = int(rng.integers(5, 500))
        info = channel_info(make_bsc(q))
        if eps <= math.exp(-info.capacity_nats * d * l / 2):
            continue  # empty alpha domain, nothing to optimise
        got = theorem1_atr(info, VlfParams(d=d, l=l, epsilon=eps)).atr_nats_per_symbol
        assert abs(got - grid_max(info, d, l, eps)) <= 1e-6, (q, eps, d, l)
        checked += 1
    assert time.perf_counter() - t0 < 60.0


def test_criterion_11_determinism(tmp_path):
    paths = []
    for workers in (1, 4):
        path = tmp_path / f"w{workers}.csv"
        code = main(["simulate", "--seed", "11", "--workers", str(workers), "--out", str(path)], out=io.StringIO())
        assert code == 0
        paths.append(path)
    assert paths[0].read_bytes() == paths[1].read_bytes()
