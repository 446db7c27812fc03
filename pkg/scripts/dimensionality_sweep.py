#!/usr/bin/env python3
"""P@3 of the concept-gated scan as a function of kept dimensions d.

Reproduces the d in {15, 100, 300} ordering study over several seeds on
planted-cluster data with concept-aligned coordinates.

Usage: python3 scripts/dimensionality_sweep.py [--seeds 1 2 3]
"""

import argparse

from rainconcepts.bench import BenchConfig, make_corpus, run_benchmark


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--dims", type=int, nargs="+", default=[15, 100, 300])
    args = ap.parse_args()

    print(f"{'seed':>4s}  " + "  ".join(f"d={d:<4d}" for d in args.dims)
          + "  non-decreasing")
    wins = 0
    for seed in args.seeds:
        cfg = BenchConfig(n_samples=2000, n_queries=30, dim=2400,
                          dims=tuple(args.dims), methods=("pcnse",),
                          seed=seed, timing_queries=30)
        report = run_benchmark(cfg, corpus=make_corpus(cfg, seed=seed))
        p3 = [row.p3[0] for row in report.rows]
        ok = all(a <= b for a, b in zip(p3, p3[1:]))
        wins += ok
        print(f"{seed:>4d}  " + "  ".join(f"{v:.3f} " for v in p3)
              + f"  {'yes' if ok else 'no'}")
    print(f"\nmajority non-decreasing: {wins}/{len(args.seeds)}")


if __name__ == "__main__":
    main()
