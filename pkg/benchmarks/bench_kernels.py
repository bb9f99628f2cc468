"""Trial throughput of the compiled and numpy kernels.

    python benchmarks/bench_kernels.py [--trials N] [--repeat R]

Both backends run identical trial blocks; the script checks that their outputs
agree before reporting timings.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from vlfatr import _backend
from vlfatr.bounds import VlfParams, theorem1_atr
from vlfatr.channel import channel_info, make_bsc
from vlfatr.sim import SimConfig, _prepare


def cases():
    ch = make_bsc(0.11)
    b = theorem1_atr(channel_info(ch), VlfParams(d=5, l=40, epsilon=1e-2))
    return {
        "collapsed  M=4.4e15 d=5 l=40": SimConfig(ch, b.m_star, 5, 40, b.gamma_nats, 1, engine="collapsed"),
        "explicit   M=2      d=5 l=40": SimConfig(ch, 2, 5, 40, b.gamma_nats, 1, engine="explicit"),
        "explicit   M=64     d=2 l=20": SimConfig(ch, 64, 2, 20, 8.0, 1, engine="explicit"),
    }


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=4096)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _backend.compiled is None:
        raise SystemExit("compiled extension not built; nothing to compare")

    trials = np.arange(args.trials, dtype=np.int64)
    print(f"{'case':32s} {'python tr/s':>14s} {'compiled tr/s':>14s} {'speedup':>8s}")
    for name, cfg in cases().items():
        py = _prepare(cfg, "python")
        cc = _prepare(cfg, "compiled")
        for a, b in zip(py.run(trials), cc.run(trials)):
            if not np.array_equal(np.asarray(a), np.asarray(b)):
                raise SystemExit(f"{name}: backends disagree")
        t_py = best_of(lambda: py.run(trials), args.repeat)
        t_cc = best_of(lambda: cc.run(trials), args.repeat)
        print(f"{name:32s} {args.trials / t_py:14.0f} {args.trials / t_cc:14.0f} {t_py / t_cc:7.1f}x")


if __name__ == "__main__":
    main()
