"""Time the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--nodes-per-year N] [--repeat R]

Both backends produce identical output; the script checks that as well.
"""
import argparse
import time

import numpy as np

from disruptix.cdindex import CdConfig, cd_all, window_bounds
from disruptix.kernels import partition_counts
from disruptix.rewiring import RewireConfig, rewire
from disruptix.synthgen import SynthConfig, generate


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes-per-year", type=int, default=500)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--retained-multiplier", type=int, default=10)
    args = ap.parse_args(argv)

    g = generate(SynthConfig(nodes_per_year=args.nodes_per_year)).graph
    print(f"graph: {g.n} nodes, {g.m} edges")
    fb_lo, r_lo, hi = window_bounds(g, CdConfig())
    karg = (g.out_ptr, g.out_idx, g.in_ptr, g.in_idx, g.time, fb_lo, r_lo, hi)
    cfg = RewireConfig(seed=0, retained_multiplier=args.retained_multiplier)

    # warm the JIT cache before timing
    partition_counts(*karg, backend="numba")
    rewire(g, RewireConfig(seed=0, retained_multiplier=1), backend="numba")

    rows = []
    for name, fn in [
        ("partition_counts", lambda b: partition_counts(*karg, backend=b)),
        (f"swap_walk x{args.retained_multiplier}|E|", lambda b: rewire(g, cfg, backend=b)),
    ]:
        t_jit, a = best_of(lambda: fn("numba"), args.repeat)
        t_np, b = best_of(lambda: fn("numpy"), 1 if "swap" in name else args.repeat)
        if isinstance(a, tuple):
            same = all(np.array_equal(x, y) for x, y in zip(a, b))
        else:
            same = np.array_equal(a.graph.cited, b.graph.cited) and a.retained == b.retained
        rows.append((name, t_jit, t_np, same))

    t_all, _ = best_of(lambda: cd_all(g), args.repeat)
    print(f"{'kernel':<24}{'numba s':>10}{'numpy s':>10}{'speedup':>9}  identical")
    for name, t_jit, t_np, same in rows:
        print(f"{name:<24}{t_jit:>10.3f}{t_np:>10.3f}{t_np / t_jit:>8.1f}x  {same}")
    print(f"cd_all end to end (numba): {t_all:.3f}s")


if __name__ == "__main__":
    main()
