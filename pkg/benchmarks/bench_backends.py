"""Benchmark the compiled trial kernel against the pure-numpy fallback.

Usage: python benchmarks/bench_backends.py [--items N] [--annotators A]
       [--classes C] [--trials T]

Runs the same removal Monte Carlo through both backends (identical masks)
and reports per-trial kernel time plus end-to-end experiment time.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from sparse_agreement import ClassDistribution, WeightScheme, synth_table
from sparse_agreement import _kernels_py
from sparse_agreement.simulation import _removal_mask, _trial_rngs, _weight_table
from sparse_agreement.simulation import RemovalPolicy

SCHEME_KINDS = ("flat", "annotations", "annotations_m1", "edge", "inv_var")


def backends():
    found = [("python", _kernels_py)]
    try:
        from sparse_agreement import _kernels

        found.insert(0, ("cython", _kernels))
    except ImportError:
        print("compiled backend not built; benchmarking the fallback only")
    return found


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--items", type=int, default=500)
    parser.add_argument("--annotators", type=int, default=8)
    parser.add_argument("--classes", type=int, default=4)
    parser.add_argument("--trials", type=int, default=20_000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    table = synth_table(args.items, args.annotators, ClassDistribution.uniform(args.classes),
                        per_annotator_skew=0.8, seed=args.seed)
    total = table.num_annotations
    removals = int(0.4 * total)
    print(f"table: {args.items} items x {args.annotators} annotators "
          f"({total} annotations), {args.trials} trials, {removals} removals/trial")

    schemes = [
        WeightScheme(k) if k != "inv_var" else WeightScheme(k, num_classes=args.classes)
        for k in SCHEME_KINDS
    ]
    item_idx, label_idx = table.dense_arrays
    n_max = int(table.count_matrix.sum(axis=1).max())
    weight_table = _weight_table(schemes, n_max)

    # pre-draw identical masks so only kernel time is measured
    masks = []
    for rng in _trial_rngs(args.seed, args.trials):
        masks.append(_removal_mask(rng, total, removals, RemovalPolicy.uniform(), None))

    results = {}
    for name, module in backends():
        kernel = module.TrialKernel(item_idx, label_idx, table.num_items,
                                    table.num_classes, weight_table)
        acc = np.zeros(len(schemes))
        start = time.perf_counter()
        for mask in masks:
            values, _, _ = kernel.spa_given_kept(mask)
            acc += values
        elapsed = time.perf_counter() - start
        results[name] = elapsed
        print(f"  {name:8s} kernel: {elapsed:8.3f} s total, "
              f"{elapsed / args.trials * 1e6:8.1f} us/trial   "
              f"(mean agreement {acc[0] / args.trials:.6f})")

    if len(results) == 2:
        speedup = results["python"] / results["cython"]
        print(f"  speedup: {speedup:.1f}x (cython over python)")


if __name__ == "__main__":
    main()
