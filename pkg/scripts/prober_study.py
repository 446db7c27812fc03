#!/usr/bin/env python3
"""Separability, calibration, and linear-vs-MLP comparison for probers.

Trains the calibrated linear ensemble on margin-separated clusters and on
an XOR layout, reporting macro-F1, boundary calibration, and the accuracy
gap to the 2-layer baseline.

Usage: python3 scripts/prober_study.py [--seed 0]
"""

import argparse

import numpy as np

from rainconcepts.metrics import macro_f1
from rainconcepts.prober import (MlpConfig, probe, train_mlp_baseline,
                                 train_prober)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    dim = 10

    pos = rng.normal(0, 0.25, (150, dim)); pos[:, 0] += 1.0
    neg = rng.normal(0, 0.25, (150, dim)); neg[:, 0] -= 1.0
    x = np.concatenate([pos, neg])
    y = np.concatenate([np.ones(150), np.zeros(150)])
    prober = train_prober(x, y)
    pred = (np.array([probe(prober, r).probability for r in x]) > 0.5).astype(int)
    print(f"separable clusters macro-F1: {macro_f1(pred, y.astype(int), 2):.4f}")

    boundary = rng.normal(0, 0.25, (60, dim))
    boundary[:, 0] = 0.0
    probs = [probe(prober, b).probability for b in boundary]
    print(f"boundary mean probability:   {np.mean(probs):.4f}")

    centers = np.array([[1, 1], [-1, -1], [1, -1], [-1, 1]], dtype=float)
    xx = np.repeat(centers, 50, axis=0) + rng.normal(0, 0.2, (200, 2))
    yy = np.repeat([1.0, 1.0, 0.0, 0.0], 50)
    linear = train_prober(xx, yy)
    lin_acc = np.mean(
        (np.array([probe(linear, r).probability for r in xx]) > 0.5) == (yy > 0.5))
    mlp = train_mlp_baseline(xx, yy, MlpConfig(epochs=400))
    mlp_acc = np.mean((mlp.predict_proba(xx) > 0.5) == (yy > 0.5))
    print(f"XOR linear accuracy:         {lin_acc:.3f}")
    print(f"XOR 2-layer accuracy:        {mlp_acc:.3f}  (gap {mlp_acc - lin_acc:+.3f})")


if __name__ == "__main__":
    main()
