"""Naive per-point reference implementations used as test oracles.

Deliberately written as plain loops over points, sharing nothing with the
fast path except the distance formula in :func:`brute_force_nearest`.
"""

from __future__ import annotations

import math

import numpy as np

from .class_metrics import ConfusionMatrix
from .distance_metrics import ClassDistanceStats, DistanceStatsBundle
from .spatial_index import brute_force_nearest


def naive_confusion(gt, pred, mask, n_classes: int) -> ConfusionMatrix:
    counts = [[0] * n_classes for _ in range(n_classes)]
    for g, p, m in zip(list(gt), list(pred), list(mask)):
        if m:
            counts[int(g)][int(p)] += 1
    return ConfusionMatrix(np.array(counts, dtype=np.int64).reshape(n_classes, n_classes))


def set_iou(gt, pred, mask, cls: int):
    """IoU of one class from explicit index sets."""
    selected = [i for i, m in enumerate(mask) if m]
    truth = {i for i in selected if int(gt[i]) == cls}
    guess = {i for i in selected if int(pred[i]) == cls}
    union = truth | guess
    if not union:
        return None
    return len(truth & guess) / len(union)


def naive_distance_stats(positions, gt, pred, mask, tau, n_classes: int) -> DistanceStatsBundle:
    """Per-class MDE / rho / mu by direct enumeration.

    ``tau`` is a sequence indexed by class id.  Raw distances are searched
    over every ground-truth point of the predicted class in the whole cloud,
    regardless of ``mask``.
    """
    positions = np.asarray(positions, dtype=np.float64)
    gt = [int(v) for v in gt]
    pred = [int(v) for v in pred]
    members = {c: positions[[i for i, g in enumerate(gt) if g == c]] for c in range(n_classes)}

    clipped_all = {c: [] for c in range(n_classes)}
    near = {c: [] for c in range(n_classes)}
    errors = {c: 0 for c in range(n_classes)}
    distant = {c: 0 for c in range(n_classes)}
    for i, selected in enumerate(mask):
        if not selected:
            continue
        c = pred[i]
        t = float(tau[c])
        if c == gt[i]:
            clipped_all[c].append(0.0)
            continue
        raw = brute_force_nearest(members[c], positions[i])
        d = min(raw, t)
        clipped_all[c].append(d)
        errors[c] += 1
        if raw > t:
            distant[c] += 1
        else:
            near[c].append(d)

    per_class = []
    for c in range(n_classes):
        n_pred = len(clipped_all[c])
        per_class.append(
            ClassDistanceStats(
                class_id=c,
                predicted_count=n_pred,
                error_count=errors[c],
                distant_count=distant[c],
                near_count=len(near[c]),
                mde=math.fsum(clipped_all[c]) / n_pred if n_pred else None,
                rho=distant[c] / errors[c] if errors[c] else None,
                mu=math.fsum(near[c]) / len(near[c]) if near[c] else None,
            )
        )
    defined = [s.mde for s in per_class if s.mde is not None]
    return DistanceStatsBundle(
        tuple(per_class), math.fsum(defined) / len(defined) if defined else None, len(defined)
    )
