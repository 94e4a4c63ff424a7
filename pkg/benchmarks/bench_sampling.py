"""Compare the compiled and pure-Python round samplers.

    python3 benchmarks/bench_sampling.py [--rounds N] [--repeat R]
"""

import argparse
import time

import numpy as np

from fixap import _core
from fixap.protocol import _session_tables, resolve_adversary, round_uniforms, scheme_by_name


def bench(kernel, u, tables, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        kernel.joint_histogram(u, *tables)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rounds", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    scheme = scheme_by_name("mz-xz-bb84")
    u = round_uniforms(0, 0, args.rounds)
    print(f"rounds={args.rounds} repeat={args.repeat} (best of)")
    print(f"{'adversary':<12} {'backend':<8} {'seconds':>9} {'Mrounds/s':>10}")
    for adv in ("none", "per-outcome", "grouped"):
        plan = resolve_adversary(scheme, adv, "h01" if adv == "grouped" else None)
        _, alice, eve, bob = _session_tables(scheme, plan)
        ref = None
        for name, kernel in sorted(_core.BACKENDS.items()):
            hist = kernel.joint_histogram(u, alice, eve, bob, 0.0)
            if ref is None:
                ref = hist
            elif not np.array_equal(ref, hist):
                raise SystemExit(f"backend {name} disagrees on {adv}")
            t = bench(kernel, u, (alice, eve, bob, 0.0), args.repeat)
            print(f"{adv:<12} {name:<8} {t:9.4f} {args.rounds / t / 1e6:10.1f}")


if __name__ == "__main__":
    main()
