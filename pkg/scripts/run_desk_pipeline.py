#!/usr/bin/env python3
"""Run the full desk-scale pipeline into a workspace and issue one query.

Usage: python3 scripts/run_desk_pipeline.py [--root WORKSPACE] [--seed 42]
"""

import argparse
import time
from pathlib import Path

from rainconcepts import pipeline
from rainconcepts.config import PipelineConfig
from rainconcepts.preprocess import utc


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--root", type=Path, default=Path("workspace"))
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()

    cfg = PipelineConfig(root=args.root, seed=args.seed)
    for name, step in (("gen-data", pipeline.gen_data),
                       ("extract", pipeline.extract),
                       ("train-probers", pipeline.train_probers),
                       ("build-pc", pipeline.build_pc),
                       ("index", pipeline.build_index)):
        t0 = time.monotonic()
        step(cfg)
        print(f"{name:14s} {time.monotonic() - t0:6.1f}s")

    index = pipeline.open_index(cfg)
    result = pipeline.query_segment(cfg, index, utc(2021, 7, 1, 12, 0), 1,
                                    min_gap_days=0.05)
    print(f"\nquery concepts: {[r.concept_id for r in result.query_concepts]}")
    for n in result.neighbors:
        tops = ", ".join(f"c{c.concept_id}={c.probability:.2f}"
                         for c in n.top_concepts[:3])
        print(f"  {n.timestamp:%Y-%m-%d %H:%M} seg={n.segment_id:<4d} "
              f"d={n.distance:8.2f}  {tops}")


if __name__ == "__main__":
    main()
