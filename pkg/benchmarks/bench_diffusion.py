"""Benchmark the diffusion kernel: compiled vs pure-numpy fallback.

Runs the same replication workload through both kernel bindings in one
process, verifies the totals agree bitwise, and prints a timing table.

    python3 benchmarks/bench_diffusion.py
    python3 benchmarks/bench_diffusion.py --nodes 1000 --edges 20000 --reps 200
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from dnim import DiffusionParams, _kernels  # noqa: E402
from dnim.social_sis import _kernel_args, _seed_mask  # noqa: E402
from dnim.synth import heavy_tailed_graph  # noqa: E402


def run_reps(kernel, g, mask, p, reps):
    totals = np.empty(reps, dtype=np.int64)
    for rep in range(reps):
        extra, *_ = kernel(*_kernel_args(g, mask, p, rep))
        totals[rep] = extra
    return totals


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nodes", type=int, default=2000)
    ap.add_argument("--edges", type=int, default=40000)
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--seeds", type=int, default=10)
    args = ap.parse_args()

    g = heavy_tailed_graph(
        n_nodes=args.nodes, n_edges=args.edges, t_start=0, t_end=2_592_000,
        rng_seed=7,
    )
    seeds = np.argsort(-g.out_degrees())[: args.seeds]
    mask = _seed_mask(g, seeds)
    p = DiffusionParams(mu=0.5, t_act=600_000, rng_seed=9)

    variants = [("numpy", _kernels.sim_totals_py)]
    if _kernels.sim_totals_jit is not None:
        variants.append(("numba", _kernels.sim_totals_jit))
        # trigger compilation outside the timed region
        run_reps(_kernels.sim_totals_jit, g, mask, p, 1)
    else:
        print("numba unavailable; timing the numpy fallback only")

    print(f"graph: {g.n_nodes} nodes, {g.n_edges} edges, "
          f"{args.reps} replications, {args.seeds} seeds")
    print(f"{'backend':8s} {'seconds':>10s} {'reps/s':>10s}")
    results = {}
    timings = {}
    for name, kernel in variants:
        t0 = time.perf_counter()
        totals = run_reps(kernel, g, mask, p, args.reps)
        dt = time.perf_counter() - t0
        results[name] = totals
        timings[name] = dt
        print(f"{name:8s} {dt:10.3f} {args.reps / dt:10.1f}")

    if len(results) == 2:
        if not np.array_equal(results["numpy"], results["numba"]):
            print("MISMATCH: backends disagree on replication totals")
            return 1
        print("backends agree bitwise on all replication totals")
        print(f"speedup: {timings['numpy'] / timings['numba']:.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
