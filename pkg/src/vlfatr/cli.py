"""Command-line entry point: ``vlfatr {capacity,compare,simulate,plot}``.

Exit status is 0 on success, 1 on bad input and 2 when a ``compare`` sweep
has no feasible row.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path

import numpy as np

from .bounds import (
    VlfParams,
    approx_atr,
    lemma1_max_m,
    lemma2_etau_cap,
    nonfeedback_rate,
    theorem1_atr,
)
from .channel import LOG2, ChannelError, ConvergenceError, channel_info, make_bec, make_bsc, optimize_input_dist, parse_channel_ex
from .plot import PlotError, plot_csv
from .sim import MessageMode, SimConfig, SimulationError, run_sim

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors (exit 1); 2 is reserved for infeasible sweeps
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def fmt(v) -> str:
    """10 significant digits, ``.`` separator, empty for missing values."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".10g")


def _add_channel_args(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--bsc", type=float, metavar="Q", help="binary symmetric channel with crossover Q (default 0.11)")
    g.add_argument("--bec", type=float, metavar="P", help="binary erasure channel with erasure probability P")
    g.add_argument("--file", type=Path, metavar="PATH", help="channel matrix file")
    p.add_argument("--tol", type=float, default=1e-10, help="Blahut-Arimoto tolerance in nats")


def _channel(args):
    try:
        if args.file is not None:
            try:
                text = args.file.read_text()
            except OSError as exc:
                raise InputError(f"cannot read channel file: {exc}") from exc
            ch, given = parse_channel_ex(text)
            return ch if given else optimize_input_dist(ch, tol=args.tol)
        if args.bec is not None:
            return make_bec(args.bec)
        return make_bsc(0.11 if args.bsc is None else args.bsc)
    except (ChannelError, ConvergenceError) as exc:
        raise InputError(str(exc)) from exc


def _unit(args) -> tuple[str, float]:
    return ("nats", 1.0) if args.nats else ("bits", 1.0 / LOG2)


def cmd_capacity(args, out) -> int:
    ch = _channel(args)
    info = channel_info(ch)
    print(f"capacity_bits {fmt(info.capacity_nats / LOG2)}", file=out)
    print(f"capacity_nats {fmt(info.capacity_nats)}", file=out)
    print(f"a0_nats {fmt(info.a0_nats)}", file=out)
    print(f"dispersion_nats2 {fmt(info.dispersion_nats2)}", file=out)
    print("input_dist " + " ".join(fmt(v) for v in ch.input_dist), file=out)
    return EXIT_OK


def l_grid(d: int, L_min: int, L_max: int, per_decade: int) -> list[int]:
    """Distinct ``l`` values whose ``L = d*l`` are log-spaced over ``[L_min, L_max]``."""
    if L_min < 1 or L_max < L_min:
        raise InputError("need 1 <= L-min <= L-max")
    n = max(2, int(math.ceil(per_decade * math.log10(L_max / L_min))) + 1)
    ls = np.unique(np.maximum(1, np.rint(np.geomspace(L_min, L_max, n) / d).astype(np.int64)))
    return [int(v) for v in ls]


def cmd_compare(args, out) -> int:
    ch = _channel(args)
    info = channel_info(ch)
    unit, scale = _unit(args)
    if not 0.0 < args.epsilon < 1.0:
        raise InputError("epsilon must lie in (0, 1)")
    if any(d < 1 for d in args.d):
        raise InputError("decoding periods must be positive")
    cols = ["L", "d", f"atr_vlf_{unit}", f"atr_approx_{unit}", f"atr_nofb_{unit}", "alpha_star", "feasible"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    any_feasible = False
    for d in args.d:
        for l in l_grid(d, args.L_min, args.L_max, args.points_per_decade):
            p = VlfParams(d=d, l=l, epsilon=args.epsilon)
            b = theorem1_atr(info, p)
            any_feasible |= b.feasible
            writer.writerow([
                p.L,
                d,
                fmt(b.atr_nats_per_symbol * scale if b.feasible else None),
                fmt(approx_atr(info, p) * scale),
                fmt(nonfeedback_rate(info, p.L, args.epsilon) * scale),
                fmt(b.alpha_star if b.feasible else None),
                fmt(b.feasible),
            ])
    _emit(buf.getvalue(), args.out, out)
    return EXIT_OK if any_feasible else EXIT_INFEASIBLE


def _emit(text: str, path: Path | None, out) -> None:
    if path is None:
        out.write(text)
    else:
        path.write_text(text)


def cmd_simulate(args, out) -> int:
    ch = _channel(args)
    info = channel_info(ch)
    try:
        p = VlfParams(d=args.d, l=args.l, epsilon=args.epsilon)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    bound = theorem1_atr(info, p)
    if not bound.feasible and (args.m is None or args.gamma is None):
        raise InputError("bound is infeasible at these parameters; pass --m and --gamma explicitly")
    m = args.m if args.m is not None else bound.m_star
    gamma = args.gamma if args.gamma is not None else bound.gamma_nats
    try:
        cfg = SimConfig(ch, m, p.d, p.l, gamma, args.trials, args.seed, MessageMode(args.message_mode), args.engine)
        stats = run_sim(cfg, workers=args.workers)
    except SimulationError as exc:
        raise InputError(str(exc)) from exc

    # bound side: Lemma values at the alpha that gives this gamma, when there is one
    cdl = info.capacity_nats * p.L
    t = (cdl - gamma) ** 2 / (2.0 * cdl) if gamma < cdl else math.nan
    alpha = math.exp(-t) if math.isfinite(t) else math.nan
    try:
        etau_cap = lemma2_etau_cap(info, p, alpha)
        m_cap = lemma1_max_m(info, p, alpha)
    except ValueError:
        etau_cap = math.nan
        m_cap = None

    record = {
        "m": m,
        "d": p.d,
        "l": p.l,
        "gamma_nats": gamma,
        "trials": stats.trials,
        "seed": args.seed,
        "message_mode": cfg.message_mode.value,
        "engine": stats.engine,
        "errors": stats.errors,
        "error_rate": stats.error_rate,
        "error_rate_lower95": stats.error_ci95[0],
        "error_rate_upper95": stats.error_ci95[1],
        "mean_tau_star": stats.mean_tau_star,
        "tau_star_se": stats.tau_star_se if stats.trials > 1 else None,
        "atr_estimate_bits": stats.atr_estimate / LOG2,
        "p_no_detect": stats.p_no_detect,
        "p_true_miss": stats.p_true_miss,
        "epsilon": p.epsilon,
        "alpha": alpha if math.isfinite(alpha) else None,
        "lemma1_max_m": m_cap,
        "lemma2_etau_cap": etau_cap if math.isfinite(etau_cap) else None,
        "theorem1_atr_bits": bound.atr_nats_per_symbol / LOG2 if bound.feasible else None,
    }
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(record))
    writer.writerow([fmt(v) if not isinstance(v, str) else v for v in record.values()])
    if args.out is not None:
        args.out.write_text(buf.getvalue())

    err_ok = stats.error_ci95[1] <= p.epsilon
    print(f"M = {m}  gamma = {fmt(gamma)} nats  d = {p.d}  l = {p.l}  trials = {stats.trials}  engine = {stats.engine}", file=out)
    print(f"error_rate          {fmt(stats.error_rate)}  95% CI [{fmt(stats.error_ci95[0])}, {fmt(stats.error_ci95[1])}]", file=out)
    print(f"mean_tau_star       {fmt(stats.mean_tau_star)}  SE {fmt(record['tau_star_se'])}", file=out)
    print(f"lemma2_etau_cap     {fmt(record['lemma2_etau_cap'])}", file=out)
    print(f"lemma1_max_m        {fmt(m_cap)}", file=out)
    print(f"atr_estimate_bits   {fmt(record['atr_estimate_bits'])}", file=out)
    print(f"theorem1_atr_bits   {fmt(record['theorem1_atr_bits'])}", file=out)
    print(f"error_rate_upper95 <= epsilon: {'PASS' if err_ok else 'FAIL'}", file=out)
    if math.isfinite(etau_cap):
        tau_ok = stats.mean_tau_star <= etau_cap + 3.0 * (stats.tau_star_se if stats.trials > 1 else 0.0)
        print(f"mean_tau_star <= lemma2_etau_cap + 3 SE: {'PASS' if tau_ok else 'FAIL'}", file=out)
    return EXIT_OK


def cmd_plot(args, out) -> int:
    try:
        path = plot_csv(args.csv, args.out)
    except (OSError, PlotError, KeyError, ValueError) as exc:
        raise InputError(f"cannot plot {args.csv}: {exc}") from exc
    print(f"wrote {path}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vlfatr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("capacity", help="capacity, max information density and dispersion of a channel")
    _add_channel_args(p)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("compare", help="VLF bound, approximation and no-feedback baseline versus L (CSV)")
    _add_channel_args(p)
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--d", type=int, nargs="+", default=[1, 50, 100])
    p.add_argument("--L-min", dest="L_min", type=int, default=10)
    p.add_argument("--L-max", dest="L_max", type=int, default=10_000)
    p.add_argument("--points-per-decade", type=int, default=32)
    p.add_argument("--nats", action="store_true", help="report nats per symbol instead of b/s/Hz")
    p.add_argument("--out", type=Path, help="CSV path (default stdout)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("simulate", help="Monte Carlo run of the random-coding scheme")
    _add_channel_args(p)
    p.add_argument("--epsilon", type=float, default=1e-2)
    p.add_argument("--d", type=int, default=5)
    p.add_argument("--l", type=int, default=40)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--m", type=int, help="codebook size (default: the bound's M)")
    p.add_argument("--gamma", type=float, help="threshold in nats (default: the bound's gamma)")
    p.add_argument("--message-mode", choices=[m.value for m in MessageMode], default=MessageMode.UNIFORM.value)
    p.add_argument("--engine", choices=["auto", "explicit", "collapsed"], default="auto")
    p.add_argument("--workers", type=int, default=1, help="threads; results do not depend on it")
    p.add_argument("--out", type=Path, help="CSV path for the one-row result")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("plot", help="render a compare CSV as SVG")
    p.add_argument("csv", type=Path)
    p.add_argument("--out", type=Path, default=Path("atr.svg"))
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except InputError as exc:
        print(f"vlfatr: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
