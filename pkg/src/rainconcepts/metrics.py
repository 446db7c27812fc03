"""Evaluation metrics: macro F1, the modified F1 objective, precision@k."""

from __future__ import annotations

import numpy as np

from .errors import RainconceptsError
from .preprocess import CLASS_BOUNDARIES

#: mm/hr thresholds of the accumulated modified-F1 terms (class boundaries
#: above zero).
MODIFIED_F1_THRESHOLDS = CLASS_BOUNDARIES[1:]


def macro_f1(predictions, labels, n_classes: int) -> float:
    """Arithmetic mean of per-class F1; a class absent from both counts 0."""
    if n_classes <= 0:
        raise RainconceptsError("n_classes must be positive")
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    f1s = []
    for c in range(n_classes):
        tp = float(np.sum((predictions == c) & (labels == c)))
        fp = float(np.sum((predictions == c) & (labels != c)))
        fn = float(np.sum((predictions != c) & (labels == c)))
        denom = 2 * tp + fp + fn
        f1s.append(2 * tp / denom if denom > 0 else 0.0)
    return float(np.mean(f1s))


def modified_f1(prediction: np.ndarray, truth: np.ndarray) -> float:
    """Mean CSI-style score over the 7 accumulated rain-rate thresholds.

    Inputs are 8-class index maps; each term binarizes at >= threshold
    class. A threshold with no truth and no prediction counts as 1
    (perfect agreement on absence).
    """
    prediction = np.asarray(prediction)
    truth = np.asarray(truth)
    if prediction.shape != truth.shape:
        raise RainconceptsError("prediction and truth shapes differ")
    terms = []
    for class_idx in range(1, len(MODIFIED_F1_THRESHOLDS) + 1):
        p = prediction >= class_idx
        t = truth >= class_idx
        hit = float(np.sum(p & t))
        miss = float(np.sum(~p & t))
        false_alarm = float(np.sum(p & ~t))
        denom = hit + 0.5 * (miss + false_alarm)
        terms.append(hit / denom if denom > 0 else 1.0)
    return float(np.mean(terms))


def modified_f1_loss(prediction: np.ndarray, truth: np.ndarray) -> float:
    return 1.0 - modified_f1(prediction, truth)


def precision_at_k(retrieved_labels, query_labels, k: int) -> float:
    """Fraction of the top-k retrieved items sharing a label with the query.

    Fewer than k retrieved items still divides by k (missing = incorrect).
    Correctness for multi-label items is non-empty label intersection.
    """
    if k < 1:
        raise RainconceptsError("k must be >= 1")
    query = set(query_labels) if not isinstance(query_labels, (int, np.integer)) \
        else {int(query_labels)}
    correct = 0
    for labels in list(retrieved_labels)[:k]:
        item = set(labels) if not isinstance(labels, (int, np.integer)) else {int(labels)}
        if query & item:
            correct += 1
    return correct / k
