"""Command-line front end.

Subcommands: analyze (closed-form tables), simulate (one run from a JSON
config), sweep (slot-point-count sweep to CSV), verify (oracle cross-checks).
Exit codes: 0 ok, 1 verification failure, 2 usage/config error.  Relative
output paths are resolved under $BACKOFFLAB_OUT_DIR when it is set.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time

import numpy as np

from . import analytics, oracle
from .laws import DiscretePoints, ExpFamily, Uniform01
from .simcore import (
    KPointDiscrete,
    config_from_json,
    config_to_json,
    dumps_canonical,
    run_simulation,
)

OUT_DIR_ENV = "BACKOFFLAB_OUT_DIR"


class UsageError(Exception):
    pass


def _resolve_out(path: str) -> str:
    base = os.environ.get(OUT_DIR_ENV)
    if base and not os.path.isabs(path):
        os.makedirs(base, exist_ok=True)
        return os.path.join(base, path)
    return path


def _parse_range(text: str):
    """Parse '2..10' or '7' into an inclusive integer range."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo, hi = int(lo), int(hi)
    else:
        lo = hi = int(text)
    if lo < 1 or hi < lo:
        raise UsageError(f"malformed range: {text!r}")
    return range(lo, hi + 1)


def _write_csv(path, header, rows):
    if path is None:
        writer = csv.writer(sys.stdout)
        writer.writerow(header)
        writer.writerows(rows)
    else:
        path = _resolve_out(path)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)


def cmd_analyze(args) -> int:
    selected = [
        name for name in ("two_point", "m_seq", "k_rates", "exp_opt")
        if getattr(args, name)
    ]
    if len(selected) != 1:
        raise UsageError("select exactly one of --two-point, --m-seq, --k-rates, --exp-opt")
    which = selected[0]

    if which == "two_point":
        if args.n is None:
            raise UsageError("--two-point requires --n")
        rows = []
        for n in _parse_range(args.n):
            if n < 2:
                raise UsageError("--two-point requires n >= 2")
            opt = analytics.two_point_optimum(n)
            rows.append([n, f"{opt.p:.9f}", f"{opt.q:.9f}", f"{opt.success:.9f}"])
        _write_csv(args.output, ["n", "p", "q", "success"], rows)
    elif which == "m_seq":
        if args.k is None:
            raise UsageError("--m-seq requires --k")
        seq = analytics.m_sequence(int(args.k))
        rows = [[j + 1, f"{m:.12f}"] for j, m in enumerate(seq.values)]
        _write_csv(args.output, ["k", "m_k"], rows)
    elif which == "k_rates":
        if args.k is None:
            raise UsageError("--k-rates requires --k")
        rates = analytics.k_point_optimal_rates(int(args.k))
        rows = [[i + 1, f"{a:.12f}"] for i, a in enumerate(rates.a)]
        _write_csv(args.output, ["i", "a_i"], rows)
    else:
        if args.lam is None or args.u is None:
            raise UsageError("--exp-opt requires --lambda and --u")
        opt = analytics.optimize_exp_family(args.lam, int(args.u), args.beta)
        rows = [[f"{opt.alpha_star:.9f}", f"{opt.delta_star:.9f}",
                 f"{opt.objective:.9f}"]]
        _write_csv(args.output, ["alpha_star", "delta_star", "objective"], rows)
    return 0


def _load_config(path, seed):
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"config is not valid JSON: {exc}")
    obj["seed"] = seed
    try:
        return config_from_json(obj)
    except (ValueError, TypeError, KeyError) as exc:
        raise UsageError(f"invalid config: {exc}")


def cmd_simulate(args) -> int:
    if args.seed is None:
        raise UsageError("--seed is required (no silent nondeterminism)")
    config = _load_config(args.config, args.seed)
    t0 = time.perf_counter()
    metrics = run_simulation(config, record_events=args.event_log is not None)
    wall = time.perf_counter() - t0
    if args.event_log is not None:
        path = _resolve_out(args.event_log)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["time", "station", "event"])
            writer.writerows(metrics.events)
    record = {
        "config": config_to_json(config),
        "metrics": metrics.to_json(),
        "analytic_reference": _analytic_reference(config),
        "wall_time": round(wall, 6),
    }
    text = dumps_canonical(record)
    if args.output is None:
        print(text)
    else:
        with open(_resolve_out(args.output), "w") as fh:
            fh.write(text + "\n")
    return 0


def _analytic_reference(config):
    """Exact per-round success probability, when the protocol has one."""
    if isinstance(config.protocol, KPointDiscrete):
        return analytics.k_point_success_exact(
            config.network.n_stations, config.protocol.law.probs
        )
    return None


def cmd_sweep(args) -> int:
    if args.seed is None:
        raise UsageError("--seed is required (no silent nondeterminism)")
    config = _load_config(args.base_config, args.seed)
    ks = _parse_range(args.k)
    if max(ks) > 64:
        raise UsageError("k range must stay within 1..64")
    n = config.network.n_stations

    plans = []
    for k in ks:
        rates = analytics.k_point_optimal_rates(k)
        probs = rates.probs(n)
        if probs.sum() > 1.0 + 1e-12:
            raise UsageError(
                f"optimal rates for k={k} give total probability "
                f"{probs.sum():.6f} > 1 at N={n}"
            )
        plans.append((k, probs))

    rows = []
    for k, probs in plans:
        m_k = analytics.m_sequence(k).final
        exact = analytics.k_point_success_exact(n, probs)
        for rep in range(args.reps):
            run_seed = int(
                np.random.SeedSequence([args.seed, k, rep]).generate_state(
                    1, dtype=np.uint64
                )[0]
            )
            cfg = dataclasses.replace(
                config,
                protocol=KPointDiscrete(law=DiscretePoints(probs)),
                seed=run_seed,
            )
            t0 = time.perf_counter()
            metrics = run_simulation(cfg)
            wall = time.perf_counter() - t0
            rows.append([
                k, rep, run_seed,
                metrics.n_tx, metrics.n_rx,
                f"{metrics.occupancy:.9f}",
                f"{metrics.mean_delay:.6f}",
                f"{metrics.empirical_p:.9f}",
                f"{exact:.9f}",
                f"{m_k:.9f}",
                f"{wall:.4f}",
            ])
    _write_csv(
        args.output,
        ["k", "rep", "seed", "n_tx", "n_rx", "busy_frac", "mean_delay",
         "p_k", "exact_success", "m_k", "wall_time"],
        rows,
    )
    return 0


def _verify_gap(seed, trials, report):
    ok = True
    cases = [
        ("gap uniform n=5 d=0.1", Uniform01(), 5, 0.1,
         analytics.gap_prob_uniform(5, 0.1)),
        ("gap uniform n=10 d=0.05", Uniform01(), 10, 0.05,
         analytics.gap_prob_uniform(10, 0.05)),
        ("gap expfam a=2 b=1 n=7 d=0.1", ExpFamily(2.0, 1.0), 7, 0.1,
         analytics.gap_prob_exp_closed(2.0, 0.1, 7)),
        ("gap expfam a=1 b=2 n=10 d=0.05", ExpFamily(1.0, 2.0), 10, 0.05,
         analytics.gap_prob_quadrature(ExpFamily(1.0, 2.0), 0.05, 10)),
    ]
    for i, (name, law, n, delta, closed) in enumerate(cases):
        est = oracle.mc_gap_probability(law, n, delta, trials, seed + i)
        ok &= _report_line(report, name, closed, est)
    return ok


def _verify_clw(seed, trials, report):
    ok = True
    cases = [
        ("clw N=2 p=0.5 T=0", 2, 0.5, 1.0, 0.0),
        ("clw N=2 p=0.5 T=2", 2, 0.5, 1.0, 2.0),
        ("clw N=5 p=0.3 T=4", 5, 0.3, 1.0, 4.0),
        ("clw N=4 p=0.6 T=0.5", 4, 0.6, 1.0, 0.5),
    ]
    for i, (name, n, p, lam, window) in enumerate(cases):
        closed = analytics.clw_success_prob(n, p, lam, window)
        est = oracle.mc_clw_round(n, p, lam, window, trials, seed + 100 + i)
        ok &= _report_line(report, name, closed, est)
    return ok


def _verify_kpoint(report):
    ok = True
    cases = [
        ("kpoint N=2 [1/3,1/3]", 2, [1 / 3, 1 / 3]),
        ("kpoint N=3 [0.2,0.3]", 3, [0.2, 0.3]),
        ("kpoint N=4 [0.3,0.2,0.1]", 4, [0.3, 0.2, 0.1]),
        ("kpoint N=6 [0.1,0.1,0.1,0.1]", 6, [0.1, 0.1, 0.1, 0.1]),
    ]
    for name, n, probs in cases:
        closed = analytics.k_point_success_exact(n, probs)
        exact = oracle.enumerate_discrete_success(n, probs)
        passed = abs(closed - exact) < 1e-12
        ok &= passed
        report.append(
            f"{name:<34} closed={closed:.12f} enum={exact:.12f} "
            f"{'PASS' if passed else 'FAIL'}"
        )
    return ok


def _report_line(report, name, closed, est):
    z = est.z_score(closed)
    passed = z < 3.0
    report.append(
        f"{name:<34} closed={closed:.6f} oracle={est.mean:.6f} "
        f"se={est.std_error:.2e} z={z:.2f} {'PASS' if passed else 'FAIL'}"
    )
    return passed


def cmd_verify(args) -> int:
    if args.seed is None:
        raise UsageError("--seed is required")
    report = []
    ok = True
    if args.suite in ("gap", "all"):
        ok &= _verify_gap(args.seed, args.trials, report)
    if args.suite in ("clw", "all"):
        ok &= _verify_clw(args.seed, args.trials, report)
    if args.suite in ("kpoint", "all"):
        ok &= _verify_kpoint(report)
    for line in report:
        print(line)
    if not ok:
        print("verification FAILED")
        return 1
    print("verification passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="backofflab",
        description="Contention-resolution analytics, simulation, and verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="print closed-form tables as CSV")
    p.add_argument("--two-point", dest="two_point", action="store_true")
    p.add_argument("--m-seq", dest="m_seq", action="store_true")
    p.add_argument("--k-rates", dest="k_rates", action="store_true")
    p.add_argument("--exp-opt", dest="exp_opt", action="store_true")
    p.add_argument("--n", help="station-count range, e.g. 2..10")
    p.add_argument("--k", type=int, help="number of slot points")
    p.add_argument("--lambda", dest="lam", type=float, help="sensing quantum")
    p.add_argument("--u", type=int, help="upper bound on station count")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="run one simulation from a JSON config")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output")
    p.add_argument("--event-log", dest="event_log")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="sweep the slot-point count k")
    p.add_argument("--base-config", dest="base_config", required=True)
    p.add_argument("--k", required=True, help="k range, e.g. 1..15")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run oracle cross-checks")
    p.add_argument("suite", choices=["gap", "clw", "kpoint", "all"])
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int, default=100_000)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
