#!/usr/bin/env python3
"""Benchmark the numba kernels against the interpreted fallback.

Expands one full BFS level on realistic frontiers (labeled states and
fire-count vectors) with both implementations and reports the speedup.
The public dispatch is controlled by CHIPFIRE_NUMBA=0/1; this script calls
the two paths directly, so it works regardless of the flag.

Usage: python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from chipfire import _kernels as K
from chipfire import closedform
from chipfire.engine import standard_initial
from chipfire.explorer import _explore_levels, _site_tables
from chipfire.variants import base, exponential, loops_everywhere


def labeled_frontier(variant, n, level):
    """A mid-BFS frontier of canonical labeled states."""
    initial = standard_initial(variant, n)
    levels, _, _ = _explore_levels(initial, variant, 5_000_000, record_parents=True)
    level = min(level, len(levels) - 1)
    return levels[level].states


def bench_labeled(variant, n, level, repeat):
    frontier = labeled_frontier(variant, n, level)
    nchips = frontier.shape[1] // 2
    radius = nchips + 2
    left, right, thresh = _site_tables(variant, radius)
    max_th = int(thresh.max())
    dummy_s = np.empty((1, 2 * nchips), np.int8)
    dummy_v = np.empty((1, max_th), np.int8)

    def run(count_fn, fill_fn):
        counts = count_fn(frontier, thresh, radius, dummy_s, dummy_v)
        total = int(counts.sum())
        offsets = np.zeros(frontier.shape[0], np.int64)
        np.cumsum(counts[:-1], out=offsets[1:])
        out_states = np.empty((total, 2 * nchips), np.int8)
        out_parent = np.empty(total, np.int64)
        out_site = np.empty(total, np.int8)
        out_vals = np.full((total, max_th), K.PAD, np.int8)
        if total:
            fill_fn(frontier, left, right, thresh, radius, offsets,
                    out_states, out_parent, out_site, out_vals)
        return total

    variants = {"numba": (K._labeled_count_jit, K._labeled_fill_jit)} if K.NUMBA_AVAILABLE else {}
    variants["pure"] = (K._labeled_count_py, K._labeled_fill_py)
    return frontier.shape[0], {name: _time(lambda: run(*fns), repeat)
                               for name, fns in variants.items()}


def bench_fire_counts(variant, n, repeat):
    table = closedform.fire_count_table(variant, n)
    sites = sorted(table)
    w = len(sites)
    totals = np.array([table[s] for s in sites], np.int64)
    init = np.array([n if s == 0 else 0 for s in sites], np.int64)
    leftx = np.array([variant.left_mult(sites[0] + j) for j in range(-1, w + 1)], np.int64)
    rightx = np.array([variant.right_mult(sites[0] + j) for j in range(-1, w + 1)], np.int64)
    threshx = np.array([variant.threshold(sites[0] + j) for j in range(-1, w + 1)], np.int64)
    # materialize the deepest frontier by running the BFS once
    frontier = np.zeros((1, w), np.int16)
    biggest = frontier
    while True:
        out = np.empty((frontier.shape[0] * w, w), np.int16)
        had = np.empty(frontier.shape[0], np.uint8)
        m, err = K.fire_count_expand(frontier, init, leftx, rightx, threshx, totals, out, had)
        assert err == 0
        if m == 0:
            break
        frontier = np.unique(out[:m], axis=0)
        if frontier.shape[0] > biggest.shape[0]:
            biggest = frontier

    def run(fn):
        out = np.empty((biggest.shape[0] * w, w), np.int16)
        had = np.empty(biggest.shape[0], np.uint8)
        return fn(biggest, init, leftx, rightx, threshx, totals, out, had)

    variants = {"numba": K._fire_count_expand_jit} if K.NUMBA_AVAILABLE else {}
    variants["pure"] = K._fire_count_expand_py
    return biggest.shape[0], {name: _time(lambda: run(fn), repeat)
                              for name, fn in variants.items()}


def _time(fn, repeat):
    fn()  # warm up (and trigger compilation for the jit path)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    jobs = [
        ("labeled base n=8", lambda: bench_labeled(base(), 8, level=12, repeat=args.repeat)),
        ("labeled loops n=11", lambda: bench_labeled(loops_everywhere(), 11, level=8, repeat=args.repeat)),
        ("labeled exponential t=1", lambda: bench_labeled(exponential(1), 8, level=5, repeat=args.repeat)),
        ("fire counts base n=12", lambda: bench_fire_counts(base(), 12, repeat=args.repeat)),
        ("fire counts loops n=15", lambda: bench_fire_counts(loops_everywhere(), 15, repeat=args.repeat)),
    ]
    print(f"{'workload':28s} {'rows':>7s} {'pure':>10s} {'numba':>10s} {'speedup':>8s}")
    for name, job in jobs:
        rows, times = job()
        pure = times["pure"]
        if "numba" in times:
            print(f"{name:28s} {rows:7d} {pure * 1e3:9.2f}ms {times['numba'] * 1e3:9.2f}ms "
                  f"{pure / times['numba']:7.1f}x")
        else:
            print(f"{name:28s} {rows:7d} {pure * 1e3:9.2f}ms {'n/a':>10s} {'':>8s}")


if __name__ == "__main__":
    main()
