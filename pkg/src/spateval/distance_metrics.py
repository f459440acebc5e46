"""Clipped nearest-neighbor error distances and their per-class summaries.

For a point predicted as class ``c`` the raw distance is the distance to the
nearest ground-truth point of ``c`` anywhere in the scene (0 when the
prediction is correct).  Clipping at the class threshold ``tau_c`` bounds the
influence of isolated far-away errors.  Per class we report

* ``mde``: mean clipped distance over all points predicted as ``c``,
* ``rho``: fraction of the class's errors whose raw distance exceeds ``tau_c``,
* ``mu``: mean distance of the remaining (near) errors,

and ``mmde``, the mean of the defined ``mde`` values.  Undefined ratios are
``None``.  Sums use :func:`math.fsum`, which is exactly rounded and therefore
independent of summation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import LabeledCloud, PredictionSet
from .errors import MissingThreshold
from .spatial_index import INFINITE, ClassIndexSet
from .thresholds import PRESETS, ThresholdConfig, preset  # noqa: F401  (re-exported)

__all__ = [
    "ThresholdConfig",
    "PointDistanceRecord",
    "PointDistances",
    "ClassDistanceStats",
    "DistanceStatsBundle",
    "raw_error_distance",
    "clip_distance",
    "point_distances",
    "aggregate_distance_stats",
    "class_distance_stats",
]


@dataclass(frozen=True)
class PointDistanceRecord:
    index: int
    predicted: int
    raw_distance: float
    clipped_distance: float
    is_error: bool
    is_distant: bool


@dataclass(frozen=True)
class PointDistances:
    """Per-point distances of one model over the whole cloud (scope-free)."""

    pred_labels: np.ndarray
    raw: np.ndarray
    clipped: np.ndarray
    is_error: np.ndarray
    is_distant: np.ndarray

    def record(self, i: int) -> PointDistanceRecord:
        return PointDistanceRecord(
            index=int(i),
            predicted=int(self.pred_labels[i]),
            raw_distance=float(self.raw[i]),
            clipped_distance=float(self.clipped[i]),
            is_error=bool(self.is_error[i]),
            is_distant=bool(self.is_distant[i]),
        )


@dataclass(frozen=True)
class ClassDistanceStats:
    class_id: int
    predicted_count: int
    error_count: int
    distant_count: int
    near_count: int
    mde: Optional[float]
    rho: Optional[float]
    mu: Optional[float]


@dataclass(frozen=True)
class DistanceStatsBundle:
    per_class: tuple[ClassDistanceStats, ...]
    mmde: Optional[float]
    mmde_defined_classes: int

    def __getitem__(self, cls: int) -> ClassDistanceStats:
        return self.per_class[cls]


def clip_distance(raw: float, tau_c: float) -> float:
    if not tau_c > 0:
        raise ValueError(f"threshold must be positive, got {tau_c!r}")
    return min(float(raw), float(tau_c))


def raw_error_distance(point_index: int, pred: int, cloud: LabeledCloud, indexes: ClassIndexSet) -> float:
    """Raw distance of one point given its predicted class.

    ``indexes`` must cover the whole cloud's ground truth, never a subset.
    """
    pred = int(pred)
    indexes._get(pred)
    if int(cloud.gt_labels[point_index]) == pred:
        return 0.0
    return float(indexes.nearest_distances(pred, cloud.positions[point_index][None, :])[0])


def point_distances(
    cloud: LabeledCloud,
    pred: PredictionSet,
    indexes: ClassIndexSet,
    config: ThresholdConfig,
    workers: int = 1,
) -> PointDistances:
    labels = pred.pred_labels
    used = np.unique(labels).tolist()
    missing = [c for c in used if c not in config.tau]
    if missing:
        raise MissingThreshold(f"{pred.model_name}: no threshold for predicted class(es) {missing}")
    tau = np.array([config.tau.get(c, INFINITE) for c in range(cloud.n_classes)])
    is_error = labels != cloud.gt_labels
    raw = np.zeros(cloud.point_count, dtype=np.float64)
    err_idx = np.flatnonzero(is_error)
    err_pred = labels[err_idx]
    for c in np.unique(err_pred):
        sel = err_idx[err_pred == c]
        raw[sel] = indexes.nearest_distances(c, cloud.positions[sel], workers=workers)
    point_tau = tau[labels]
    clipped = np.minimum(raw, point_tau)
    is_distant = is_error & (raw > point_tau)
    for a in (raw, clipped, is_error, is_distant):
        a.setflags(write=False)
    return PointDistances(labels, raw, clipped, is_error, is_distant)


def aggregate_distance_stats(
    distances: PointDistances,
    n_classes: int,
    scope=None,
) -> DistanceStatsBundle:
    """Per-class statistics over the points selected by ``scope``."""
    labels = distances.pred_labels
    if scope is None:
        mask = np.ones(labels.shape[0], dtype=bool)
    else:
        mask = np.asarray(getattr(scope, "mask", scope), dtype=bool)
        if mask.shape != labels.shape:
            raise ValueError(f"scope mask has length {mask.shape[0]}, expected {labels.shape[0]}")

    predicted = np.bincount(labels[mask], minlength=n_classes)
    err_idx = np.flatnonzero(mask & distances.is_error)
    err_cls = labels[err_idx]
    order = np.argsort(err_cls, kind="stable")
    err_idx, err_cls = err_idx[order], err_cls[order]
    bounds = np.searchsorted(err_cls, np.arange(n_classes + 1))

    per_class = []
    for c in range(n_classes):
        idx = err_idx[bounds[c]:bounds[c + 1]]
        n_pred = int(predicted[c])
        n_err = int(idx.size)
        distant = distances.is_distant[idx]
        n_distant = int(distant.sum())
        n_near = n_err - n_distant
        clipped = distances.clipped[idx]
        mde = math.fsum(clipped.tolist()) / n_pred if n_pred else None
        rho = n_distant / n_err if n_err else None
        mu = math.fsum(clipped[~distant].tolist()) / n_near if n_near else None
        per_class.append(ClassDistanceStats(c, n_pred, n_err, n_distant, n_near, mde, rho, mu))

    defined = [s.mde for s in per_class if s.mde is not None]
    mmde = math.fsum(defined) / len(defined) if defined else None
    return DistanceStatsBundle(tuple(per_class), mmde, len(defined))


def class_distance_stats(
    cloud: LabeledCloud,
    pred: PredictionSet,
    scope,
    indexes: ClassIndexSet,
    config: ThresholdConfig,
    workers: int = 1,
) -> DistanceStatsBundle:
    distances = point_distances(cloud, pred, indexes, config, workers=workers)
    return aggregate_distance_stats(distances, cloud.n_classes, scope)
