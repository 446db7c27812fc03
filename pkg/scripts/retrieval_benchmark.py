#!/usr/bin/env python3
"""Runtime/precision benchmark of the retrieval methods on synthetic data.

Desk scale by default; pass --full for the N=20,000 / D=22,680 / d=900
configuration (~1 min, ~2.5 GB peak on one core).

Usage: python3 scripts/retrieval_benchmark.py [--full] [--seed 42] [--out report.md]
"""

import argparse
from pathlib import Path

from rainconcepts.bench import BenchConfig, run_benchmark


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--full", action="store_true")
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args()

    if args.full:
        cfg = BenchConfig(n_samples=20_000, n_queries=12, dim=22_680,
                          dims=(900,), methods=("full", "pcnse"),
                          timing_queries=10, seed=args.seed)
    else:
        cfg = BenchConfig(n_samples=1000, n_queries=20, dim=1200,
                          signature_coords=150, dims=(15, 100, 300),
                          timing_queries=10, seed=args.seed)

    report = run_benchmark(cfg)
    text = report.to_markdown()
    print(text)
    if args.out:
        args.out.write_text(text + "\n")
        print(f"\nwrote {args.out}")


if __name__ == "__main__":
    main()
