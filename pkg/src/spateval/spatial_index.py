"""Exact per-class nearest-neighbor distance queries.

One KD-tree is built per class over that class's ground-truth points.  The
tree only selects the neighbor; the returned distance is recomputed here with
the same arithmetic as :func:`brute_force_nearest` so both routes agree bit
for bit on the distance value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .core import ClassPartition, LabeledCloud
from .errors import UnknownClass

INFINITE = math.inf


def euclidean(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise distance, evaluated as sqrt((dx*dx + dy*dy) + dz*dz)."""
    d = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    return np.sqrt(d[..., 0] * d[..., 0] + d[..., 1] * d[..., 1] + d[..., 2] * d[..., 2])


@dataclass(frozen=True)
class ClassIndex:
    points: np.ndarray
    tree: Optional[cKDTree]

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    @property
    def is_empty(self) -> bool:
        return self.tree is None


@dataclass(frozen=True)
class ClassIndexSet:
    indexes: tuple[ClassIndex, ...]

    @property
    def n_classes(self) -> int:
        return len(self.indexes)

    def sizes(self) -> list[int]:
        return [ix.size for ix in self.indexes]

    def _get(self, cls) -> ClassIndex:
        c = int(cls)
        if not 0 <= c < len(self.indexes):
            raise UnknownClass(f"class {cls} is not indexed ({len(self.indexes)} classes)")
        return self.indexes[c]

    def nearest_distances(self, cls, queries, workers: int = 1) -> np.ndarray:
        """Vectorized :func:`nearest_distance` for an (M, 3) array of queries."""
        ix = self._get(cls)
        queries = np.asarray(queries, dtype=np.float64).reshape(-1, 3)
        if ix.is_empty:
            return np.full(queries.shape[0], INFINITE)
        if queries.shape[0] == 0:
            return np.empty(0)
        _, nn = ix.tree.query(queries, k=1, workers=workers)
        return euclidean(queries, ix.points[nn])


def build_class_indexes(cloud: LabeledCloud, partition: Optional[ClassPartition] = None) -> ClassIndexSet:
    if partition is None:
        partition = ClassPartition.build(cloud)
    out = []
    for members in partition.by_gt:
        pts = np.array(cloud.positions[members], dtype=np.float64)
        pts.setflags(write=False)
        tree = cKDTree(pts, balanced_tree=False, compact_nodes=False) if len(pts) else None
        out.append(ClassIndex(pts, tree))
    return ClassIndexSet(tuple(out))


def nearest_distance(indexes: ClassIndexSet, cls, query: Sequence[float]) -> float:
    """Exact distance from ``query`` to the closest ground-truth point of ``cls``.

    Returns ``math.inf`` when the class has no ground-truth points.
    """
    return float(indexes.nearest_distances(cls, np.asarray(query, dtype=np.float64)[None, :])[0])


def brute_force_nearest(points, query: Sequence[float]) -> float:
    """Linear scan reference for :func:`nearest_distance`."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if pts.shape[0] == 0:
        return INFINITE
    return float(euclidean(pts, np.asarray(query, dtype=np.float64)).min())
