"""Command-line entry point: ``intforce <subcommand> ...``."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import errors
from .duality import dual_transform
from .finite_field import example_trace
from .harness import SweepSpec, emit_csv, parse_methods, run_antennas_sweep, run_sweep
from .lattice import select_integer_matrix
from .model import ChannelUplink, PowerAllocation, UplinkConfig
from .optimizer import OptimizerOptions
from .rates import effective_noise, optimal_uplink_equalizer

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 1, 2


def _grid(lo: float, hi: float, step: float) -> list[float]:
    if step <= 0:
        raise ValueError("--step must be positive")
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 10) for i in range(max(n, 0))]


def _opts(ns) -> OptimizerOptions:
    if ns.tol <= 0 or ns.max_iters < 1:
        raise ValueError("--tol must be positive and --max-iters at least 1")
    return OptimizerOptions(tol=ns.tol, max_iters=ns.max_iters, delta=ns.delta)


def _write(result, out) -> None:
    if out in (None, "-"):
        emit_csv(result, sys.stdout)
    else:
        emit_csv(result, out)


def _report_degenerate(result) -> None:
    if not result.ok():
        print(f"warning: {100 * result.degenerate_fraction():.2f}% of trials degenerate",
              file=sys.stderr)


def cmd_sweep(ns) -> int:
    spec = SweepSpec(n=ns.n, l=ns.l, p_db_grid=_grid(ns.pmin, ns.pmax, ns.step),
                     trials=ns.trials, seed=ns.seed, methods=parse_methods(ns.methods),
                     opts=_opts(ns))
    result = run_sweep(spec, workers=ns.workers)
    _write(result, ns.out)
    _report_degenerate(result)
    return EXIT_OK


def cmd_antennas(ns) -> int:
    grid = list(range(ns.nmin, ns.nmax + 1))
    result = run_antennas_sweep(ns.l, grid, ns.p, trials=ns.trials, seed=ns.seed,
                                methods=parse_methods(ns.methods), opts=_opts(ns),
                                workers=ns.workers)
    _write(result, ns.out)
    _report_degenerate(result)
    return EXIT_OK


def cmd_duality(ns) -> int:
    rng = np.random.default_rng(ns.seed)
    h = ChannelUplink(rng.standard_normal((ns.n, ns.l)))
    p_total = 10 ** (ns.p / 10)
    c = tuple(np.ones(1) for _ in range(ns.l))
    w = rng.uniform(0.5, 1.5, ns.l)
    p = PowerAllocation(p_total * w / w.sum(), p_total)
    a, _ = select_integer_matrix(h, c, p, ns.delta)
    up = UplinkConfig(channel=h, a=a, b=optimal_uplink_equalizer(h, c, p, a), c=c, p=p)
    down = dual_transform(up)
    back = dual_transform(down)
    beta_u = up.p.diagonal / effective_noise(up)
    beta_d = down.p.diagonal / effective_noise(down)
    print(f"uplink SINRs      {np.array2string(beta_u, precision=6)}")
    print(f"downlink SINRs    {np.array2string(beta_d, precision=6)}")
    print(f"max SINR residual {np.max(np.abs(beta_d - beta_u) / beta_u):.3e}")
    print(f"power uplink {up.consumed_power():.9g}  downlink {down.consumed_power():.9g}  "
          f"rel residual {abs(down.consumed_power() - up.consumed_power()) / up.consumed_power():.3e}")
    rt = np.max(np.abs(back.p.diagonal - up.p.diagonal) / up.p.diagonal)
    print(f"round-trip uplink power residual {rt:.3e}")
    return EXIT_OK


def cmd_ffdemo(ns) -> int:
    print(example_trace(ns.example))
    return EXIT_OK


def _optimizer_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=1e-8, help="relative SINR change for convergence")
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--delta", type=float, default=0.75, help="LLL parameter")


def _run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--methods", default="capacity,if,zf")
    p.add_argument("--workers", type=int, default=1, help="worker processes (output is identical)")
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    _optimizer_args(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="intforce", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sweep", help="average sum rate versus total power")
    sp.add_argument("--n", type=int, required=True, help="basestation antennas")
    sp.add_argument("--l", type=int, required=True, help="single-antenna users")
    sp.add_argument("--pmin", type=float, default=0.0)
    sp.add_argument("--pmax", type=float, default=20.0)
    sp.add_argument("--step", type=float, default=1.0)
    _run_args(sp)
    sp.set_defaults(func=cmd_sweep)

    ap = sub.add_parser("antennas-sweep", help="average sum rate versus antenna count")
    ap.add_argument("--l", type=int, required=True)
    ap.add_argument("--nmin", type=int, required=True)
    ap.add_argument("--nmax", type=int, required=True)
    ap.add_argument("--p", type=float, default=20.0, help="total power in dB")
    _run_args(ap)
    ap.set_defaults(func=cmd_antennas)

    dp = sub.add_parser("duality-check", help="SINR and power conservation residuals")
    dp.add_argument("--seed", type=int, default=0)
    dp.add_argument("--l", type=int, default=3)
    dp.add_argument("--n", type=int, default=3)
    dp.add_argument("--p", type=float, default=10.0, help="total power in dB")
    _optimizer_args(dp)
    dp.set_defaults(func=cmd_duality)

    fp = sub.add_parser("ffdemo", help="worked Z_3 examples")
    fp.add_argument("--example", type=int, choices=(1, 2), default=1)
    fp.set_defaults(func=cmd_ffdemo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING)
    try:
        return ns.func(ns)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, errors.IntForceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
