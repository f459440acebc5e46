"""Merging predictions of overlapping tiles.

A point covered by several tiles receives one probability row per tile and
model.  Rows are matched across tiles by the exact bit pattern of the global
(x, y, z) triple, averaged, and the merged label is the argmax of the mean
(ties go to the lowest class id).
"""

from __future__ import annotations

import glob
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import PROBABILITY_SUM_TOLERANCE, LabeledCloud, PredictionSet
from .errors import InvalidDistribution, MissingColumn, MissingProbabilities
from .ingestion import EvalConfig, _labels, _model_columns, _positions, read_table


@dataclass(frozen=True)
class Tile:
    positions: np.ndarray
    probabilities: dict
    gt_labels: Optional[np.ndarray] = None
    origin: tuple = (0.0, 0.0, 0.0)
    name: str = ""

    def global_positions(self) -> np.ndarray:
        return np.asarray(self.positions, dtype=np.float64) + np.asarray(self.origin, dtype=np.float64)


@dataclass(frozen=True)
class TileStack:
    tiles: tuple
    n_classes: int

    @property
    def model_names(self) -> tuple:
        names = []
        for t in self.tiles:
            for m in t.probabilities:
                if m not in names:
                    names.append(m)
        return tuple(sorted(names))


@dataclass(frozen=True)
class MergeDiagnostics:
    tile_count: int
    row_count: int
    point_count: int
    duplicated_points: int
    max_multiplicity: int
    gt_conflicts: int


@dataclass(frozen=True)
class MergedPredictions:
    positions: np.ndarray
    gt_labels: Optional[np.ndarray]
    predictions: tuple
    diagnostics: MergeDiagnostics
    multiplicity: np.ndarray = field(repr=False, default=None)

    def cloud(self, n_classes: int) -> LabeledCloud:
        if self.gt_labels is None:
            raise MissingColumn("merged tiles carry no ground truth")
        return LabeledCloud(self.positions, self.gt_labels, n_classes)


def _check_rows(probs: np.ndarray, where: str) -> None:
    bad = ~np.isfinite(probs).all(axis=1) | (probs < 0).any(axis=1)
    bad |= np.abs(probs.sum(axis=1) - 1.0) > PROBABILITY_SUM_TOLERANCE
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise InvalidDistribution(f"{where}: row {i} is not a probability distribution: {probs[i].tolist()}")


def merge_tile_predictions(stack: TileStack) -> MergedPredictions:
    tiles = stack.tiles
    models = stack.model_names
    if not tiles or not models:
        raise MissingProbabilities("no tiles or no model probabilities to merge")
    for k, t in enumerate(tiles):
        for m in models:
            probs = t.probabilities.get(m)
            where = f"tile {t.name or k}, model {m!r}"
            if probs is None:
                raise MissingProbabilities(f"{where}: no probabilities")
            probs = np.asarray(probs, dtype=np.float64)
            if probs.shape != (len(t.positions), stack.n_classes):
                raise MissingProbabilities(
                    f"{where}: probabilities have shape {probs.shape}, expected "
                    f"({len(t.positions)}, {stack.n_classes})"
                )
            _check_rows(probs, where)

    xyz = np.ascontiguousarray(np.concatenate([t.global_positions() for t in tiles]))
    keys = xyz.view(np.uint64).reshape(-1, 3)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    positions = xyz[first]
    counts = np.bincount(inverse)

    merged = []
    for m in models:
        probs = np.concatenate([np.asarray(t.probabilities[m], dtype=np.float64) for t in tiles])
        # Canonical row order inside each point group makes the sums independent of tile order.
        order = np.lexsort(tuple(probs[:, c] for c in reversed(range(probs.shape[1]))) + (inverse,))
        starts = np.flatnonzero(np.r_[True, np.diff(inverse[order]) != 0])
        mean = np.add.reduceat(probs[order], starts, axis=0) / counts[:, None]
        merged.append(PredictionSet(m, np.argmax(mean, axis=1), mean))

    gt = None
    conflicts = 0
    if all(t.gt_labels is not None for t in tiles):
        labels = np.concatenate([np.asarray(t.gt_labels, dtype=np.int64) for t in tiles])
        lo = np.full(len(positions), np.iinfo(np.int64).max)
        hi = np.full(len(positions), -1)
        np.minimum.at(lo, inverse, labels)
        np.maximum.at(hi, inverse, labels)
        gt = lo
        conflicts = int((lo != hi).sum())

    diag = MergeDiagnostics(
        tile_count=len(tiles),
        row_count=int(len(inverse)),
        point_count=int(len(positions)),
        duplicated_points=int((counts > 1).sum()),
        max_multiplicity=int(counts.max()),
        gt_conflicts=conflicts,
    )
    return MergedPredictions(positions, gt, tuple(merged), diag, counts)


def read_tile_file(path, config: EvalConfig, origin=(0.0, 0.0, 0.0)) -> Tile:
    table = read_table(path)
    for name in ("x", "y", "z"):
        if name not in table.columns:
            raise MissingColumn(f"{path}: required column {name!r} is missing")
    _, prob_cols = _model_columns(table.columns)
    if config.models is not None:
        prob_cols = {m: prob_cols.get(m) for m in config.models}
    probs = {}
    for m, cols in prob_cols.items():
        missing = [c for c in range(config.n_classes) if not cols or c not in cols]
        if missing:
            raise MissingProbabilities(f"{path}: model {m!r} lacks prob columns for classes {missing}")
        probs[m] = np.column_stack([table.col(cols[c]) for c in range(config.n_classes)])
    gt = _labels(table, "gt", config.n_classes) if "gt" in table.columns else None
    return Tile(_positions(table), probs, gt, tuple(origin), str(path))


def load_tile_stack(paths: Sequence, config: EvalConfig) -> TileStack:
    if isinstance(paths, str):
        paths = sorted(glob.glob(paths))
    if not paths:
        raise FileNotFoundError("no tile files matched")
    return TileStack(tuple(read_tile_file(p, config) for p in paths), config.n_classes)


__all__ = [
    "Tile",
    "TileStack",
    "MergeDiagnostics",
    "MergedPredictions",
    "merge_tile_predictions",
    "read_tile_file",
    "load_tile_stack",
]
