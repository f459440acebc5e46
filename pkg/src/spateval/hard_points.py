"""Hard points (points misclassified by at least one compared model) and
scoped evaluation.

Metrics restricted to a scope still measure distances against every
ground-truth point of the scene; only the aggregation is restricted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .class_metrics import ClassificationStats, ConfusionMatrix, classification_stats, confusion_matrix
from .core import EvalContext, LabeledCloud, PredictionSet
from .distance_metrics import DistanceStatsBundle, PointDistances, aggregate_distance_stats, point_distances
from .errors import NoModels
from .spatial_index import ClassIndexSet, build_class_indexes
from .thresholds import ThresholdConfig

FULL = "full"
HARD = "hard"


@dataclass(frozen=True)
class EvalScope:
    mask: np.ndarray
    label: str

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool, copy=True)
        if mask.ndim != 1:
            raise ValueError("scope mask must be one-dimensional")
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @property
    def selected_count(self) -> int:
        return int(self.mask.sum())

    @property
    def point_count(self) -> int:
        return int(self.mask.shape[0])

    @property
    def fraction(self) -> float:
        return self.selected_count / self.point_count if self.point_count else 0.0

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)


def full_scope(n_points: int) -> EvalScope:
    return EvalScope(np.ones(n_points, dtype=bool), FULL)


def compute_hard_points(cloud: LabeledCloud, preds: Sequence[PredictionSet]) -> EvalScope:
    if not preds:
        raise NoModels("hard points need at least one model")
    mask = np.zeros(cloud.point_count, dtype=bool)
    for p in preds:
        mask |= p.pred_labels != cloud.gt_labels
    return EvalScope(mask, HARD)


@dataclass(frozen=True)
class ModelMetrics:
    model_name: str
    confusion: ConfusionMatrix
    classification: ClassificationStats
    distance: DistanceStatsBundle

    @property
    def error_count(self) -> int:
        return self.confusion.scope_size - int(np.trace(self.confusion.counts))


@dataclass(frozen=True)
class ScopeResult:
    scope: EvalScope
    per_model: Mapping[str, ModelMetrics]

    @property
    def label(self) -> str:
        return self.scope.label

    @property
    def selected_count(self) -> int:
        return self.scope.selected_count


def evaluate_scoped(
    cloud: LabeledCloud,
    preds: Sequence[PredictionSet],
    scope: EvalScope,
    indexes: ClassIndexSet,
    config: ThresholdConfig,
    workers: int = 1,
    distances: Optional[Mapping[str, PointDistances]] = None,
) -> ScopeResult:
    """Classification and distance metrics of every model on ``scope``.

    ``indexes`` must be built over the full cloud.  Precomputed per-point
    ``distances`` (keyed by model name) may be passed to share work between
    scopes; they do not depend on the scope.
    """
    if scope.point_count != cloud.point_count:
        raise ValueError(f"scope covers {scope.point_count} points, cloud has {cloud.point_count}")
    per_model = {}
    for p in preds:
        d = distances[p.model_name] if distances is not None else None
        if d is None:
            d = point_distances(cloud, p, indexes, config, workers=workers)
        cm = confusion_matrix(cloud.gt_labels, p.pred_labels, scope.mask, cloud.n_classes)
        per_model[p.model_name] = ModelMetrics(
            p.model_name,
            cm,
            classification_stats(cm),
            aggregate_distance_stats(d, cloud.n_classes, scope.mask),
        )
    return ScopeResult(scope, per_model)


@dataclass(frozen=True)
class MetricsReport:
    class_names: tuple[str, ...]
    thresholds: tuple[float, ...]
    models: tuple[str, ...]
    scopes: tuple[ScopeResult, ...]
    metadata: Mapping[str, object]

    def scope(self, label: str) -> ScopeResult:
        for s in self.scopes:
            if s.label == label:
                return s
        raise KeyError(f"no {label!r} scope in this report")


POLICIES = {
    "undefined": "0/0 ratios are null and excluded from macro means; *_defined_classes gives the count",
    "empty_gt_class": "errors predicted as a class with no ground-truth points clip to its threshold and count as distant",
    "distance_reference": "raw distances always search the full scene ground truth, whatever the scope",
    "mmde_on_subset": "mmde averages only classes with at least one in-scope prediction",
}


def evaluate(ctx: EvalContext, scope: str = "both", workers: int = 1, indexes: Optional[ClassIndexSet] = None) -> MetricsReport:
    """Run the full-set and/or hard-point evaluation for every model.

    ``scope`` is ``"full"``, ``"hard"`` or ``"both"``.
    """
    if scope not in (FULL, HARD, "both"):
        raise ValueError(f"scope must be full, hard or both, got {scope!r}")
    cloud, preds = ctx.cloud, ctx.predictions
    if indexes is None:
        indexes = build_class_indexes(cloud)
    distances = {p.model_name: point_distances(cloud, p, indexes, ctx.thresholds, workers) for p in preds}

    scopes = []
    if scope in (FULL, "both"):
        scopes.append(full_scope(cloud.point_count))
    if scope in (HARD, "both"):
        scopes.append(compute_hard_points(cloud, preds))
    results = tuple(
        evaluate_scoped(cloud, preds, s, indexes, ctx.thresholds, workers, distances) for s in scopes
    )
    thresholds = tuple(ctx.thresholds.tau.get(c) for c in range(ctx.n_classes))
    return MetricsReport(ctx.class_names, thresholds, ctx.model_names, results, dict(POLICIES))
