"""Concept sensitivity and importance for segmentation outputs.

Per-pixel logits are collapsed to one scalar per class by a wrapper
aggregation; sensitivity is the forward-difference directional
derivative of that scalar along a concept direction at the bottleneck,
and importance is the fraction of class-k samples with positive
sensitivity.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import RainconceptsError
from .metrics import modified_f1_loss
from .model import ChannelPruneMap, FeatureMap, SEGMENT_SIZE, ToyModel, bilinear_resize
from .prober import ConceptProber

DEFAULT_EPSILON = 1e-3
LOSS_COLUMN = "loss"


class WrapperKind(Enum):
    LogitSum = "logit_sum"
    MaskedSum = "masked_sum"
    MaskedScaledSum = "masked_scaled_sum"
    MaskedPixelCount = "masked_pixel_count"
    Loss = "loss"


@dataclass(frozen=True)
class WrapValue:
    value: float
    empty_mask: bool = False

    def __float__(self) -> float:
        return self.value


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=0, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=0, keepdims=True)


def wrap(kind: WrapperKind, logits: np.ndarray, class_k: int,
         truth: np.ndarray | None = None) -> WrapValue:
    """Aggregate per-pixel class logits to one scalar for ``class_k``."""
    logits = np.asarray(logits, dtype=np.float64)
    if not np.isfinite(logits).all():
        raise RainconceptsError("logits must be finite")
    if kind is WrapperKind.LogitSum:
        return WrapValue(float(logits[class_k].sum()))
    if kind is WrapperKind.Loss:
        if truth is None:
            raise RainconceptsError("Loss wrapper needs a ground-truth class map")
        return WrapValue(modified_f1_loss(np.argmax(logits, axis=0), truth))

    mask = np.argmax(logits, axis=0) == class_k
    if not mask.any():
        return WrapValue(0.0, empty_mask=True)
    if kind is WrapperKind.MaskedSum:
        return WrapValue(float(logits[class_k][mask].sum()))
    soft_count = float(_softmax(logits)[class_k][mask].sum())
    if kind is WrapperKind.MaskedPixelCount:
        return WrapValue(soft_count)
    if kind is WrapperKind.MaskedScaledSum:
        masked_sum = float(logits[class_k][mask].sum())
        return WrapValue(masked_sum / soft_count if soft_count > 0 else 0.0)
    raise RainconceptsError(f"unknown wrapper {kind}")


def _as_feature(model: ToyModel, sample) -> FeatureMap:
    if isinstance(sample, FeatureMap):
        return sample
    return model.encode(sample)


def sensitivity(model: ToyModel, sample, cav: np.ndarray, class_k: int,
                wrapper: WrapperKind, epsilon: float = DEFAULT_EPSILON,
                truth: np.ndarray | None = None) -> float:
    """Forward-difference sensitivity of the wrapped class output along cav.

    ``cav`` is a unit direction over the full bottleneck feature map.
    """
    if epsilon <= 0:
        raise RainconceptsError("epsilon must be > 0")
    feature = _as_feature(model, sample)
    v = np.asarray(cav, dtype=np.float64).reshape(feature.values.shape)
    base = wrap(wrapper, model.decode(feature), class_k, truth=truth)
    shifted = FeatureMap(values=feature.values + epsilon * v,
                         reference_time=feature.reference_time)
    pert = wrap(wrapper, model.decode(shifted), class_k, truth=truth)
    s = (float(pert) - float(base)) / epsilon
    if not np.isfinite(s):
        raise RainconceptsError("non-finite wrapper value in sensitivity")
    return s


def analytic_sensitivity(model: ToyModel, sample, cav: np.ndarray, class_k: int,
                         wrapper: WrapperKind) -> float:
    """Exact directional derivative for the affine toy head.

    Available for LogitSum and MaskedSum (argmax mask held fixed at the
    base point).
    """
    feature = _as_feature(model, sample)
    logits = model.decode(feature)
    if wrapper is WrapperKind.LogitSum:
        weights = np.ones(logits.shape[1:])
    elif wrapper is WrapperKind.MaskedSum:
        weights = (np.argmax(logits, axis=0) == class_k).astype(np.float64)
    else:
        raise RainconceptsError(f"no analytic path for wrapper {wrapper}")
    grad = model.decode_pullback(class_k, weights)
    v = np.asarray(cav, dtype=np.float64).reshape(feature.values.shape)
    return float(np.sum(grad * v))


def importance(model: ToyModel, samples, cav: np.ndarray, class_k: int,
               wrapper: WrapperKind, epsilon: float = DEFAULT_EPSILON) -> float | None:
    """Fraction of class-k samples with positive sensitivity.

    ``samples`` is a list of (sample, truth) where truth is either a set
    of ground-truth classes or a class-index map. Returns None when no
    sample's ground truth includes ``class_k`` (undefined, not zero).
    """
    in_class = []
    for sample, truth in samples:
        classes = set(np.unique(truth)) if isinstance(truth, np.ndarray) else set(truth)
        if class_k in {int(c) for c in classes}:
            truth_map = truth if isinstance(truth, np.ndarray) else None
            in_class.append((sample, truth_map))
    if not in_class:
        return None
    positives = sum(
        1 for sample, truth_map in in_class
        if sensitivity(model, sample, cav, class_k, wrapper,
                       epsilon=epsilon, truth=truth_map) > 0
    )
    return positives / len(in_class)


def lift_cav(prober: ConceptProber | np.ndarray, prune: ChannelPruneMap,
             bottleneck_shape: tuple[int, int, int]) -> np.ndarray:
    """Embed a segment-space CAV into the full bottleneck feature space.

    The (active-channels x 9 x 9) direction is bilinearly resized to the
    bottleneck spatial shape, scattered into the active channel slots,
    and renormalized to unit length.
    """
    flat = np.asarray(getattr(prober, "cav", prober), dtype=np.float64)
    c_active = len(prune.active_indices)
    seg = flat.reshape(c_active, SEGMENT_SIZE, SEGMENT_SIZE)
    c_total, h, w = bottleneck_shape
    spatial = bilinear_resize(seg, (h, w))
    full = np.zeros((c_total, h, w))
    full[list(prune.active_indices)] = spatial
    norm = np.linalg.norm(full)
    if norm == 0:
        raise RainconceptsError("cannot lift a zero CAV")
    return full / norm


def perturb_prediction(model: ToyModel, sample, cav: np.ndarray,
                       alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Baseline and perturbed argmax class maps for a signed CAV shift."""
    feature = _as_feature(model, sample)
    v = np.asarray(cav, dtype=np.float64).reshape(feature.values.shape)
    baseline = np.argmax(model.decode(feature), axis=0)
    shifted = FeatureMap(values=feature.values + alpha * v,
                         reference_time=feature.reference_time)
    perturbed = np.argmax(model.decode(shifted), axis=0)
    return baseline, perturbed


@dataclass(frozen=True)
class ImportanceReport:
    scores: dict[int, dict[str, float | None]]  # concept -> column -> score
    concept_names: dict[int, str]
    wrapper: WrapperKind
    sample_counts: dict[str, int]
    epsilon: float

    def to_json(self) -> str:
        payload = {
            "wrapper": self.wrapper.value,
            "epsilon": self.epsilon,
            "sample_counts": self.sample_counts,
            "scores": {
                str(cid): {col: cols[col] for col in sorted(cols)}
                for cid, cols in sorted(self.scores.items())
            },
            "concept_names": {str(k): v for k, v in sorted(self.concept_names.items())},
        }
        return json.dumps(payload, indent=1, sort_keys=True)

    def write_csv(self, path: Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["concept_id", "concept_name", "class_or_loss",
                             "score", "n_samples"])
            for cid in sorted(self.scores):
                for col in sorted(self.scores[cid]):
                    score = self.scores[cid][col]
                    writer.writerow([
                        cid, self.concept_names.get(cid, ""), col,
                        "" if score is None else f"{score:.6f}",
                        self.sample_counts.get(col, 0),
                    ])


def importance_report(model: ToyModel, dataset, probers: list[ConceptProber],
                      classes, wrapper: WrapperKind, prune: ChannelPruneMap,
                      concept_names: dict[int, str] | None = None,
                      epsilon: float = DEFAULT_EPSILON) -> ImportanceReport:
    """Concept x class importance matrix plus a loss-wrapper column.

    ``dataset`` holds (sample, truth-map) pairs; truth maps also supply
    the per-class ground-truth membership.
    """
    sample_counts: dict[str, int] = {}
    for k in classes:
        sample_counts[str(k)] = sum(
            1 for _, truth in dataset if k in np.unique(truth))
    sample_counts[LOSS_COLUMN] = len(dataset)

    scores: dict[int, dict[str, float | None]] = {}
    for p in probers:
        cav = lift_cav(p, prune, model.config.bottleneck_shape)
        row: dict[str, float | None] = {}
        for k in classes:
            row[str(k)] = importance(model, dataset, cav, int(k), wrapper,
                                     epsilon=epsilon)
        # loss column: every sample has a defined loss
        loss_positives = sum(
            1 for sample, truth in dataset
            if sensitivity(model, sample, cav, 0, WrapperKind.Loss,
                           epsilon=epsilon, truth=truth) > 0
        )
        row[LOSS_COLUMN] = loss_positives / len(dataset) if dataset else None
        scores[p.concept_id] = row
    return ImportanceReport(
        scores=scores,
        concept_names=concept_names or {},
        wrapper=wrapper,
        sample_counts=sample_counts,
        epsilon=epsilon,
    )
