#!/usr/bin/env python3
"""Benchmark the compiled k-point kernel against the pure-Python fallback.

Both backends consume identical per-station PCG64 streams, so besides timing
this also asserts their outputs match exactly.
"""

import argparse
import time

import numpy as np

from backofflab import analytics
from backofflab._kernels import backends
from backofflab.simcore import (
    FullBuffer,
    PoissonTraffic,
    _station_streams,
    generate_arrivals,
)


def run_once(mod, cum, n, delta, duration, seed, traffic):
    bgs, arr_rngs = _station_streams(seed, n)
    arrivals = generate_arrivals(traffic, n, duration, arr_rngs)
    t0 = time.perf_counter()
    out = mod.kpoint_run(cum, n, delta, duration, 1.0, bgs, arrivals)
    return time.perf_counter() - t0, out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=5)
    parser.add_argument("--k", type=int, default=8)
    parser.add_argument("--delta", type=float, default=100.0)
    parser.add_argument("--duration", type=float, default=5e6)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    mods = backends()
    if "compiled" not in mods:
        print("compiled kernel not available; only timing the pure backend")

    cum = np.cumsum(analytics.k_point_optimal_rates(args.k).probs(args.n))
    scenarios = [("FB", FullBuffer()), ("POS", PoissonTraffic(100.0))]

    for label, traffic in scenarios:
        print(f"\n== {label}: N={args.n} k={args.k} delta={args.delta:.0f} "
              f"duration={args.duration:.0f} ==")
        timings, outputs = {}, {}
        for name, mod in mods.items():
            best = min(
                run_once(mod, cum, args.n, args.delta, args.duration,
                         args.seed, traffic)[0]
                for _ in range(args.repeats)
            )
            timings[name] = best
            outputs[name] = run_once(
                mod, cum, args.n, args.delta, args.duration, args.seed, traffic
            )[1]
            print(f"  {name:<9} {best * 1e3:8.2f} ms  "
                  f"(n_rx={outputs[name]['n_rx']})")
        if len(mods) == 2:
            p, c = outputs["pure"], outputs["compiled"]
            same = all(
                p[key] == c[key]
                for key in ("n_tx", "n_rx", "busy_time", "rounds_contended",
                            "rounds_success")
            ) and np.array_equal(p["delays"], c["delays"])
            print(f"  outputs identical: {same}")
            assert same, "backend outputs diverged"
            print(f"  speedup: {timings['pure'] / timings['compiled']:.1f}x")


if __name__ == "__main__":
    main()
