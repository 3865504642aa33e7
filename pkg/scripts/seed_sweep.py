#!/usr/bin/env python3
"""Best-of-replicates k-means totals over a range of seeds.

Prints, per dataset, how often each best total occurs and how many
replicate runs ended in a worse local minimum.
"""
import argparse
import time
from collections import Counter

from outlier_gate.dataset import iris, iris_outlier_fixture
from outlier_gate.kmeans import KMeansConfig, kmeans


def sweep(ds, seeds, k, replicates):
    best, strays = Counter(), 0
    for seed in seeds:
        res = kmeans(ds, KMeansConfig(k=k, replicates=replicates, seed=seed))
        best[round(res.best.total_sum, 4)] += 1
        strays += sum(s > res.best.total_sum + 1e-6 for s in res.all_sums)
    return best, strays


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=100)
    parser.add_argument("--k", type=int, default=3)
    parser.add_argument("--replicates", type=int, default=11)
    args = parser.parse_args()
    for name, ds in (("iris+outlier", iris_outlier_fixture()), ("iris", iris())):
        t0 = time.perf_counter()
        best, strays = sweep(ds, range(args.seeds), args.k, args.replicates)
        took = time.perf_counter() - t0
        print(f"{name:13s} n={ds.n} best totals {dict(best)}; "
              f"stray replicates {strays}/{args.seeds * args.replicates}; {took:.2f}s")
