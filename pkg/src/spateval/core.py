"""Shared data model: labeled clouds, prediction sets, class partitions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    EmptyCloud,
    InvalidProbabilities,
    LengthMismatch,
    MissingThreshold,
    NoModels,
    NonFiniteCoordinate,
    UnknownClass,
)
from .thresholds import ThresholdConfig

PROBABILITY_SUM_TOLERANCE = 1e-6


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


def _as_labels(values, what: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise LengthMismatch(f"{what} must be one-dimensional, got shape {arr.shape}")
    if arr.dtype.kind == "f":
        if not np.all(np.isfinite(arr)) or np.any(arr != np.floor(arr)):
            raise UnknownClass(f"{what} contains non-integer values")
    elif arr.dtype.kind not in "iub" and arr.size:
        raise UnknownClass(f"{what} must be integers, got dtype {arr.dtype}")
    return arr.astype(np.int64)


def _check_label_range(labels: np.ndarray, n_classes: int, what: str) -> None:
    bad = np.flatnonzero((labels < 0) | (labels >= n_classes))
    if bad.size:
        i = int(bad[0])
        raise UnknownClass(
            f"{what}[{i}] = {int(labels[i])} is outside the {n_classes} declared classes"
        )


@dataclass(frozen=True)
class LabeledCloud:
    """Point positions (meters, float64) with ground-truth class ids."""

    positions: np.ndarray
    gt_labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise LengthMismatch(f"positions must have shape (N, 3), got {pos.shape}")
        labels = _as_labels(self.gt_labels, "gt_labels")
        if pos.shape[0] != labels.shape[0]:
            raise LengthMismatch(
                f"{pos.shape[0]} positions but {labels.shape[0]} ground-truth labels"
            )
        if pos.shape[0] == 0:
            raise EmptyCloud("a cloud needs at least one point")
        finite = np.isfinite(pos).all(axis=1)
        if not finite.all():
            i = int(np.flatnonzero(~finite)[0])
            raise NonFiniteCoordinate(f"point {i} has non-finite coordinates {pos[i].tolist()}")
        n_classes = int(self.n_classes)
        if n_classes < 1:
            raise UnknownClass("at least one class must be declared")
        _check_label_range(labels, n_classes, "gt_labels")
        object.__setattr__(self, "positions", _frozen(pos))
        object.__setattr__(self, "gt_labels", _frozen(labels))
        object.__setattr__(self, "n_classes", n_classes)

    @property
    def point_count(self) -> int:
        return int(self.gt_labels.shape[0])

    def __len__(self):
        return self.point_count


@dataclass(frozen=True)
class PredictionSet:
    """One model's labels (and optionally per-class probabilities) for a cloud."""

    model_name: str
    pred_labels: np.ndarray
    probabilities: Optional[np.ndarray] = None

    def __post_init__(self):
        if not isinstance(self.model_name, str) or not self.model_name:
            raise ValueError("model_name must be a non-empty string")
        labels = _as_labels(self.pred_labels, f"pred_labels of {self.model_name!r}")
        if labels.size and labels.min() < 0:
            i = int(np.flatnonzero(labels < 0)[0])
            raise UnknownClass(f"{self.model_name}: predicted label {int(labels[i])} at point {i}")
        object.__setattr__(self, "pred_labels", _frozen(labels))
        if self.probabilities is not None:
            probs = np.asarray(self.probabilities, dtype=np.float64)
            if probs.ndim != 2 or probs.shape[0] != labels.shape[0]:
                raise LengthMismatch(
                    f"{self.model_name}: probabilities shape {probs.shape} does not match "
                    f"{labels.shape[0]} predictions"
                )
            bad = ~np.isfinite(probs).all(axis=1) | (probs < 0).any(axis=1)
            bad |= np.abs(probs.sum(axis=1) - 1.0) > PROBABILITY_SUM_TOLERANCE
            if bad.any():
                i = int(np.flatnonzero(bad)[0])
                raise InvalidProbabilities(
                    f"{self.model_name}: probability row {i} is not a distribution"
                )
            object.__setattr__(self, "probabilities", _frozen(probs))

    def __len__(self):
        return int(self.pred_labels.shape[0])


def partition_by_class(labels, n_classes: int) -> tuple[np.ndarray, ...]:
    """Group point indices by label.

    Returns one ascending index array per class id in ``range(n_classes)``;
    classes without points get an empty array.
    """
    labels = np.asarray(labels, dtype=np.int64)
    order = np.argsort(labels, kind="stable")
    counts = np.bincount(labels, minlength=n_classes)[:n_classes]
    bounds = np.concatenate(([0], np.cumsum(counts)))
    return tuple(_frozen(order[bounds[c]:bounds[c + 1]]) for c in range(n_classes))


@dataclass(frozen=True)
class ClassPartition:
    by_gt: tuple[np.ndarray, ...]
    by_pred: dict = field(default_factory=dict)

    @classmethod
    def build(cls, cloud: LabeledCloud, preds: Sequence[PredictionSet] = ()) -> "ClassPartition":
        by_gt = partition_by_class(cloud.gt_labels, cloud.n_classes)
        by_pred = {
            p.model_name: partition_by_class(p.pred_labels, cloud.n_classes) for p in preds
        }
        return cls(by_gt, by_pred)


@dataclass(frozen=True)
class EvalContext:
    """A cloud and its predictions after cross-validation."""

    cloud: LabeledCloud
    predictions: tuple[PredictionSet, ...]
    thresholds: ThresholdConfig
    class_names: tuple[str, ...]

    @property
    def n_classes(self) -> int:
        return self.cloud.n_classes

    @property
    def point_count(self) -> int:
        return self.cloud.point_count

    @property
    def model_names(self) -> tuple[str, ...]:
        return tuple(p.model_name for p in self.predictions)

    def tau_array(self) -> np.ndarray:
        return self.thresholds.as_array(self.n_classes)


def validate_inputs(
    cloud: LabeledCloud,
    preds: Sequence[PredictionSet],
    config: ThresholdConfig,
    class_names: Optional[Sequence[str]] = None,
    require_models: bool = True,
) -> EvalContext:
    preds = tuple(preds)
    if require_models and not preds:
        raise NoModels("at least one prediction set is required")
    names = [p.model_name for p in preds]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise ValueError(f"duplicate model names: {dupes}")
    n = cloud.point_count
    for p in preds:
        if len(p) != n:
            raise LengthMismatch(f"model {p.model_name!r} has {len(p)} predictions for {n} points")
        _check_label_range(p.pred_labels, cloud.n_classes, f"pred_labels of {p.model_name!r}")
        if p.probabilities is not None and p.probabilities.shape[1] != cloud.n_classes:
            raise LengthMismatch(
                f"model {p.model_name!r} has {p.probabilities.shape[1]} probability columns "
                f"for {cloud.n_classes} classes"
            )

    present = set(np.unique(cloud.gt_labels).tolist())
    for p in preds:
        present.update(np.unique(p.pred_labels).tolist())
    missing = sorted(c for c in present if c not in config.tau)
    if missing:
        raise MissingThreshold(f"no threshold for class(es) {missing}")

    if class_names is None:
        class_names = tuple(str(c) for c in range(cloud.n_classes))
    class_names = tuple(class_names)
    if len(class_names) != cloud.n_classes:
        raise LengthMismatch(
            f"{len(class_names)} class names for {cloud.n_classes} declared classes"
        )
    return EvalContext(cloud, preds, config, class_names)
