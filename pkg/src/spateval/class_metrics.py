"""Confusion-matrix classification metrics: OA, per-class IoU, mIoU.

Ratios that would be 0/0 are ``None`` ("undefined") rather than 0 or 1, and
undefined IoUs are left out of the mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    """Integer counts; rows are ground truth, columns are predictions."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64, copy=True)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValueError(f"confusion matrix must be square, got {counts.shape}")
        if (counts < 0).any():
            raise ValueError("confusion counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def n_classes(self) -> int:
        return int(self.counts.shape[0])

    @property
    def scope_size(self) -> int:
        return int(self.counts.sum())

    @property
    def is_empty(self) -> bool:
        return self.scope_size == 0

    @property
    def tp(self) -> np.ndarray:
        return np.diag(self.counts).copy()

    @property
    def fp(self) -> np.ndarray:
        return self.counts.sum(axis=0) - self.tp

    @property
    def fn(self) -> np.ndarray:
        return self.counts.sum(axis=1) - self.tp

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts + other.counts)

    def __eq__(self, other):
        if not isinstance(other, ConfusionMatrix):
            return NotImplemented
        return np.array_equal(self.counts, other.counts)

    __hash__ = None


@dataclass(frozen=True)
class ClassificationStats:
    overall_accuracy: Optional[float]
    iou_per_class: Mapping[int, Optional[float]]
    mean_iou: Optional[float]
    defined_class_count: int
    scope_size: int


def confusion_matrix(gt, pred, scope=None, n_classes: Optional[int] = None) -> ConfusionMatrix:
    """Count (gt, pred) pairs over the points selected by ``scope``.

    ``scope`` may be a boolean mask, an object with a ``mask`` attribute, or
    ``None`` for all points.
    """
    gt = np.asarray(gt, dtype=np.int64)
    pred = np.asarray(pred, dtype=np.int64)
    if gt.shape != pred.shape:
        raise ValueError(f"gt has {gt.shape[0]} labels, pred has {pred.shape[0]}")
    if n_classes is None:
        n_classes = int(max(gt.max(initial=-1), pred.max(initial=-1))) + 1
    if scope is not None:
        mask = np.asarray(getattr(scope, "mask", scope), dtype=bool)
        if mask.shape != gt.shape:
            raise ValueError(f"scope mask has length {mask.shape[0]}, expected {gt.shape[0]}")
        gt, pred = gt[mask], pred[mask]
    flat = np.bincount(gt * n_classes + pred, minlength=n_classes * n_classes)
    return ConfusionMatrix(flat.reshape(n_classes, n_classes))


def overall_accuracy(cm: ConfusionMatrix) -> Optional[float]:
    total = cm.scope_size
    if total == 0:
        return None
    return int(np.trace(cm.counts)) / total


def iou_per_class(cm: ConfusionMatrix) -> dict[int, Optional[float]]:
    tp, fp, fn = cm.tp, cm.fp, cm.fn
    out = {}
    for c in range(cm.n_classes):
        denom = int(tp[c] + fp[c] + fn[c])
        out[c] = int(tp[c]) / denom if denom else None
    return out


def mean_iou(ious: Mapping[int, Optional[float]]) -> tuple[Optional[float], int]:
    """Mean of the defined entries and how many there were."""
    defined = [v for v in ious.values() if v is not None]
    if not defined:
        return None, 0
    return math.fsum(defined) / len(defined), len(defined)


def classification_stats(cm: ConfusionMatrix) -> ClassificationStats:
    ious = iou_per_class(cm)
    miou, n_defined = mean_iou(ious)
    return ClassificationStats(overall_accuracy(cm), ious, miou, n_defined, cm.scope_size)
