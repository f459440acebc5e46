"""Synthetic scenes with controlled error geometry.

All randomness comes from NumPy's PCG64 bit generator seeded with
``SceneSpec.seed`` and consumed in a fixed order, so a spec and seed always
produce the same scene and the same table bytes.

The default spec builds ground, vegetation and box buildings and two models
with the same number of errors for each (true class, predicted class) pair:

* ``boundary-confuser`` mislabels points lying within ``width`` meters of the
  target class (errors along class interfaces);
* ``blob-confuser`` mislabels a compact cluster of points lying more than
  ``offset`` meters from the target class.

Their confusion matrices are therefore identical while the distance metrics
separate them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import LabeledCloud, PredictionSet
from .errors import SpecError
from .ingestion import EvalConfig, config_from_dict, config_to_toml, write_cloud_file
from .spatial_index import build_class_indexes
from .thresholds import ThresholdConfig

GROUND, VEGETATION, BUILDING = 0, 1, 2
CLASS_NAMES = ("ground", "vegetation", "building")
DEFAULT_TAU = (2.0, 3.0, 10.0)

MAX_POINTS = 100_000


@dataclass(frozen=True)
class ErrorRecipe:
    """Relabel ``count`` points of ``source`` as ``target``.

    ``kind="band"`` picks points within ``distance`` meters of the target
    class, ``kind="blob"`` a compact cluster farther than ``distance``.
    """

    kind: str
    source: int
    target: int
    count: int
    distance: float


@dataclass(frozen=True)
class ModelRecipe:
    name: str
    errors: tuple = ()


def _default_models() -> tuple:
    pairs = ((BUILDING, GROUND, 100, 1.0, 4.0), (GROUND, BUILDING, 100, 1.0, 12.0))
    return (
        ModelRecipe("boundary-confuser", tuple(ErrorRecipe("band", s, t, n, w) for s, t, n, w, _ in pairs)),
        ModelRecipe("blob-confuser", tuple(ErrorRecipe("blob", s, t, n, o) for s, t, n, _, o in pairs)),
    )


@dataclass(frozen=True)
class SceneSpec:
    seed: int = 1
    extent: float = 80.0
    ground_spacing: float = 1.0
    ground_jitter: float = 0.05
    n_buildings: int = 4
    building_size: tuple = (8.0, 16.0)
    building_height: tuple = (6.0, 14.0)
    facade_spacing: float = 0.5
    n_trees: int = 15
    tree_points: int = 80
    tree_radius: float = 2.0
    tree_height: tuple = (3.0, 8.0)
    tau: tuple = DEFAULT_TAU
    models: tuple = field(default_factory=_default_models)


@dataclass(frozen=True)
class Scene:
    cloud: LabeledCloud
    predictions: tuple
    config: EvalConfig
    expected: dict


def _check_spec(spec: SceneSpec) -> None:
    if not spec.extent > 0 or not spec.ground_spacing > 0 or spec.ground_spacing > spec.extent:
        raise SpecError(f"degenerate extent {spec.extent} / spacing {spec.ground_spacing}")
    if not spec.facade_spacing > 0:
        raise SpecError("facade_spacing must be positive")
    lo, hi = spec.building_size
    if spec.n_buildings and not (0 < lo <= hi < spec.extent):
        raise SpecError(f"building_size {spec.building_size} does not fit the extent")
    if min(spec.building_height) <= 0 or min(spec.tree_height) <= 0 or spec.tree_radius <= 0:
        raise SpecError("heights and radii must be positive")
    if spec.n_buildings < 0 or spec.n_trees < 0 or spec.tree_points < 0:
        raise SpecError("counts must be non-negative")
    if len(spec.tau) != len(CLASS_NAMES):
        raise SpecError(f"need {len(CLASS_NAMES)} thresholds, got {len(spec.tau)}")
    for model in spec.models:
        for r in model.errors:
            if r.kind not in ("band", "blob"):
                raise SpecError(f"unknown error kind {r.kind!r}")
            if r.source == r.target or not (0 <= r.source < 3 and 0 <= r.target < 3):
                raise SpecError(f"bad class pair {r.source}->{r.target}")
            if r.count < 0:
                raise SpecError("error count must be non-negative")
            tau = spec.tau[r.target]
            if r.kind == "band" and not 0 < r.distance < tau:
                raise SpecError(f"band width {r.distance} must lie in (0, tau={tau})")
            if r.kind == "blob" and not r.distance > tau:
                raise SpecError(f"blob offset {r.distance} must exceed tau={tau}")


def _place_buildings(spec, rng):
    boxes = []
    lo, hi = spec.building_size
    margin = 3.0
    for _ in range(spec.n_buildings * 50):
        if len(boxes) == spec.n_buildings:
            break
        w, d = lo + (hi - lo) * rng.random(2)
        x0 = margin + (spec.extent - 2 * margin - w) * rng.random()
        y0 = margin + (spec.extent - 2 * margin - d) * rng.random()
        h = spec.building_height[0] + (spec.building_height[1] - spec.building_height[0]) * rng.random()
        box = (x0, y0, x0 + w, y0 + d, h)
        if all(box[0] > b[2] + margin or box[2] < b[0] - margin or
               box[1] > b[3] + margin or box[3] < b[1] - margin for b in boxes):
            boxes.append(box)
    if len(boxes) < spec.n_buildings:
        raise SpecError(f"could only place {len(boxes)} of {spec.n_buildings} buildings")
    return boxes


def _inside(x, y, box, pad=0.0):
    return (x > box[0] - pad) & (x < box[2] + pad) & (y > box[1] - pad) & (y < box[3] + pad)


def _building_points(box, spacing):
    x0, y0, x1, y1, h = box
    xs = np.arange(x0, x1 + 1e-9, spacing)
    ys = np.arange(y0, y1 + 1e-9, spacing)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    roof = np.column_stack([gx.ravel(), gy.ravel(), np.full(gx.size, h)])
    zs = np.arange(spacing / 2, h, spacing)
    ring = np.concatenate([
        np.column_stack([xs, np.full(xs.size, y0)]),
        np.column_stack([xs, np.full(xs.size, y1)]),
        np.column_stack([np.full(ys.size - 2, x0), ys[1:-1]]),
        np.column_stack([np.full(ys.size - 2, x1), ys[1:-1]]),
    ])
    walls = np.column_stack([np.tile(ring, (zs.size, 1)), np.repeat(zs, ring.shape[0])])
    return np.concatenate([roof, walls])


def _geometry(spec, rng):
    boxes = _place_buildings(spec, rng)
    g = np.arange(0.0, spec.extent + 1e-9, spec.ground_spacing)
    gx, gy = np.meshgrid(g, g, indexing="ij")
    gx, gy = gx.ravel(), gy.ravel()
    keep = np.ones(gx.size, dtype=bool)
    for b in boxes:
        keep &= ~_inside(gx, gy, b)
    gx, gy = gx[keep], gy[keep]
    gz = spec.ground_jitter * (2.0 * rng.random(gx.size) - 1.0)
    parts = [(np.column_stack([gx, gy, gz]), GROUND)]

    for b in boxes:
        parts.append((_building_points(b, spec.facade_spacing), BUILDING))

    placed = 0
    for _ in range(spec.n_trees * 50):
        if placed == spec.n_trees:
            break
        cx, cy = spec.extent * rng.random(2)
        if any(_inside(cx, cy, b, pad=spec.tree_radius + 1.0) for b in boxes):
            continue
        lo, hi = spec.tree_height
        cz = lo + (hi - lo) * rng.random()
        u = rng.random((spec.tree_points, 3))
        r = spec.tree_radius * np.cbrt(u[:, 0])
        theta = 2 * np.pi * u[:, 1]
        cosphi = 2 * u[:, 2] - 1
        sinphi = np.sqrt(1 - cosphi * cosphi)
        pts = np.column_stack([
            cx + r * sinphi * np.cos(theta),
            cy + r * sinphi * np.sin(theta),
            np.maximum(cz + r * cosphi, 0.5),
        ])
        parts.append((pts, VEGETATION))
        placed += 1

    positions = np.concatenate([p for p, _ in parts])
    labels = np.concatenate([np.full(len(p), c, dtype=np.int64) for p, c in parts])
    return positions, labels


def _apply_recipe(recipe, positions, gt, pred, distances, rng):
    if recipe.count == 0:
        return
    d = distances[recipe.target]
    free = (gt == recipe.source) & (pred == gt)
    if recipe.kind == "band":
        cand = np.flatnonzero(free & (d <= recipe.distance))
    else:
        cand = np.flatnonzero(free & (d > recipe.distance))
    if cand.size < recipe.count:
        raise SpecError(
            f"only {cand.size} candidates for {recipe.kind} errors "
            f"{CLASS_NAMES[recipe.source]}->{CLASS_NAMES[recipe.target]}, need {recipe.count}"
        )
    if recipe.kind == "band":
        chosen = cand[rng.permutation(cand.size)[: recipe.count]]
    else:
        center = positions[cand[int(rng.integers(cand.size))]]
        offsets = positions[cand] - center
        near = np.argsort(np.einsum("ij,ij->i", offsets, offsets), kind="stable")
        chosen = cand[near[: recipe.count]]
    pred[chosen] = recipe.target


def generate_scene(spec: Optional[SceneSpec] = None) -> Scene:
    spec = spec or SceneSpec()
    _check_spec(spec)
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    positions, gt = _geometry(spec, rng)
    if len(gt) > MAX_POINTS:
        raise SpecError(f"scene has {len(gt)} points, limit is {MAX_POINTS}")
    cloud = LabeledCloud(positions, gt, len(CLASS_NAMES))
    indexes = build_class_indexes(cloud)
    distances = [indexes.nearest_distances(c, positions) for c in range(len(CLASS_NAMES))]

    preds = []
    for model in spec.models:
        pred = gt.copy()
        for recipe in model.errors:
            _apply_recipe(recipe, positions, gt, pred, distances, rng)
        preds.append(PredictionSet(model.name, pred))

    config = config_from_dict({
        "dataset": "synthetic",
        "classes": [{"id": c, "name": n, "tau": t} for c, (n, t) in enumerate(zip(CLASS_NAMES, spec.tau))],
    })
    return Scene(cloud, tuple(preds), config, _expected(spec))


def _expected(spec: SceneSpec) -> dict:
    """Qualitative ordering the recipes guarantee, per perturbed class."""
    out = {"perturbed_classes": {}, "equal_confusion": _same_error_counts(spec)}
    for model in spec.models:
        for r in model.errors:
            entry = out["perturbed_classes"].setdefault(CLASS_NAMES[r.target], {"near": [], "distant": []})
            if r.count:
                entry["near" if r.kind == "band" else "distant"].append(model.name)
    return out


def _same_error_counts(spec: SceneSpec) -> bool:
    sigs = {tuple(sorted((r.source, r.target, r.count) for r in m.errors)) for m in spec.models}
    return len(sigs) <= 1


def write_scene(scene: Scene, output_dir) -> dict:
    """Write ``scene.csv``, ``config.toml`` and ``expected.json``; return their paths."""
    from pathlib import Path

    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"scene": out / "scene.csv", "config": out / "config.toml", "expected": out / "expected.json"}
    write_cloud_file(paths["scene"], scene.cloud, scene.predictions)
    paths["config"].write_text(config_to_toml(scene.config), encoding="utf-8")
    paths["expected"].write_text(json.dumps(scene.expected, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return paths


def scene_spec_from_dict(doc: dict) -> SceneSpec:
    doc = dict(doc)
    kwargs = {}
    for key, value in doc.items():
        if key == "models":
            kwargs["models"] = tuple(
                ModelRecipe(str(m["name"]), tuple(ErrorRecipe(**e) for e in m.get("errors", ())))
                for m in value
            )
        elif key in SceneSpec.__dataclass_fields__:
            kwargs[key] = tuple(value) if isinstance(value, list) else value
        else:
            raise SpecError(f"unknown scene spec key {key!r}")
    try:
        return SceneSpec(**kwargs)
    except TypeError as exc:
        raise SpecError(str(exc)) from None


def load_scene_spec(path) -> SceneSpec:
    from .ingestion import tomllib

    with open(path, "rb") as fh:
        return scene_spec_from_dict(tomllib.load(fh))


def random_scene(
    n_points: int,
    n_classes: int,
    n_models: int = 2,
    error_rate: float = 0.05,
    extent: float = 100.0,
    seed: int = 0,
    tau: Optional[tuple] = None,
):
    """Uniformly scattered labeled points with random mislabels.

    Returns ``(cloud, predictions, thresholds)``; used for property checks
    and throughput runs rather than for geometric realism.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    positions = extent * rng.random((n_points, 3))
    gt = rng.integers(0, n_classes, n_points)
    preds = []
    for m in range(n_models):
        pred = gt.copy()
        wrong = rng.random(n_points) < error_rate
        shift = rng.integers(1, n_classes, int(wrong.sum())) if n_classes > 1 else 0
        pred[wrong] = (gt[wrong] + shift) % n_classes
        preds.append(PredictionSet(f"model{m}", pred))
    if tau is None:
        tau = tuple(float(t) for t in 1.0 + 9.0 * rng.random(n_classes))
    return LabeledCloud(positions, gt, n_classes), preds, ThresholdConfig.from_sequence(tau)


__all__ = [
    "ErrorRecipe",
    "ModelRecipe",
    "SceneSpec",
    "Scene",
    "generate_scene",
    "write_scene",
    "scene_spec_from_dict",
    "load_scene_spec",
    "random_scene",
]
