"""Benchmark the greedy merge kernel: compiled extension vs numpy fallback.

Two workloads:

* ``random``  -- generic symmetric costs (few exact ties), the friendly case
  for the row-minimum cache.
* ``spatial`` -- costs from the spatio-temporal traffic model, where every
  pair of non-overlapping users shares the exact same cost; the resulting
  tie mass forces frequent cache rescans and is the hot production case.

Usage: python benchmarks/bench_merge.py [--sizes 500,1000,2000] [--reps 3]
"""
import argparse
import time

import numpy as np

from corrslot import _merge_py
from corrslot.allocation import cost_matrix
from corrslot.traffic import SpatioTemporalModel, deploy_users

try:
    from corrslot import _merge_core
except ImportError:
    _merge_core = None


def random_cost(n, rng):
    q = rng.random((n, n)) * 0.2
    q = (q + q.T) / 2
    np.fill_diagonal(q, np.inf)
    return q


def spatial_cost(n, rng):
    loc = deploy_users(n, 100.0, 15.0, rng)
    model = SpatioTemporalModel(loc, 1e-4)
    return cost_matrix(model.exact_stats())


def run(impl, cost, k, rule, reps):
    best = np.inf
    for _ in range(reps):
        work = cost.copy()
        start = time.perf_counter()
        impl.merge_groups(work, k, rule)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="500,1000,2000")
    parser.add_argument("--reps", type=int, default=3)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    impls = [("python", _merge_py)]
    if _merge_core is not None:
        impls.append(("compiled", _merge_core))
    else:
        print("compiled extension not available; benchmarking fallback only")

    print(f"{'workload':>8} {'rule':>4} {'n':>6} " +
          " ".join(f"{name:>10}" for name, _ in impls) + "   speedup")
    rng = np.random.default_rng(0)
    for workload, make in (("random", random_cost), ("spatial", spatial_cost)):
        for rule_name, rule in (("max", 0), ("sum", 1)):
            for n in sizes:
                cost = make(n, rng)
                k = max(1, int(0.15 * n))
                times = [run(impl, cost, k, rule, args.reps) for _, impl in impls]
                ratio = times[0] / times[-1] if len(times) > 1 else float("nan")
                print(
                    f"{workload:>8} {rule_name:>4} {n:>6} "
                    + " ".join(f"{t * 1e3:>8.1f}ms" for t in times)
                    + f"   {ratio:>5.1f}x"
                )


if __name__ == "__main__":
    main()
