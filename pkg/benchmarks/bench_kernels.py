#!/usr/bin/env python3
"""Compare the compiled kernels against the numpy fallback.

Times the three hot paths (leaf updates, batched prefix finds, full decay
refresh) under each importable backend and prints a speedup table.

    python3 benchmarks/bench_kernels.py [--n 100000] [--finds 1000000]
"""

import argparse
import math
import time

import numpy as np

from freshreplay import SumTree
from freshreplay._kernels import available_backends, get_backend
from freshreplay.bench import run_refresh_bench


def time_set_leaves(backend, n, updates):
    tree = SumTree(n, backend=backend)
    rng = np.random.default_rng(0)
    idx = rng.integers(0, n, updates)
    vals = rng.uniform(0.0, 1.0, updates)
    start = time.perf_counter()
    for i in range(updates):
        tree.set_leaf(int(idx[i]), float(vals[i]))
    return time.perf_counter() - start


def time_prefix_finds(backend, n, finds):
    tree = SumTree(n, backend=backend)
    rng = np.random.default_rng(1)
    sum_tree, _, base = tree.arrays
    sum_tree[base : base + n] = rng.uniform(0.01, 1.0, n)
    tree.rebuild()
    xs = rng.uniform(0.0, tree.total() * 0.999999, finds)
    start = time.perf_counter()
    tree.prefix_find_many(xs)
    return time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=100_000)
    parser.add_argument("--updates", type=int, default=50_000)
    parser.add_argument("--finds", type=int, default=1_000_000)
    parser.add_argument("--refresh-runs", type=int, default=10)
    args = parser.parse_args()

    backends = available_backends()
    results = {}
    for name in backends:
        backend = get_backend(name)
        results[name] = {
            "set_leaf": time_set_leaves(backend, args.n, args.updates),
            "prefix_find": time_prefix_finds(backend, args.n, args.finds),
            "refresh": run_refresh_bench(args.n, runs=args.refresh_runs, backend_name=name).median,
        }

    ops = {
        "set_leaf": args.updates,
        "prefix_find": args.finds,
        "refresh": args.n,
    }
    print(f"n={args.n}  backends: {', '.join(backends)}")
    header = f"{'kernel':<14}" + "".join(f"{b + ' (ms)':>16}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for op, count in ops.items():
        row = f"{op:<14}"
        times = [results[b][op] for b in backends]
        for t in times:
            row += f"{1000.0 * t:>16.3f}"
        if len(times) == 2:
            slower, faster = max(times), min(times)
            ratio = slower / faster if faster > 0 else math.inf
            winner = backends[times.index(faster)]
            row += f"{ratio:>8.1f}x  ({winner}, {1e9 * faster / count:.0f} ns/op)"
        print(row)


if __name__ == "__main__":
    main()
