"""Exit criteria, one test per criterion.  A PASS/FAIL line per criterion is
printed in the terminal summary."""

import math
import time

import numpy as np
import pytest

from spateval import (
    LabeledCloud,
    PredictionSet,
    ThresholdConfig,
    Tile,
    TileStack,
    aggregate_distance_stats,
    build_class_indexes,
    class_distance_stats,
    compute_hard_points,
    confusion_matrix,
    evaluate,
    iou_per_class,
    merge_tile_predictions,
    nearest_distance,
    overall_accuracy,
    point_distances,
    validate_inputs,
    write_cloud_file,
)
from spateval import cli
from spateval.ingestion import config_from_dict, config_to_toml
from spateval.reference import naive_distance_stats
from spateval.spatial_index import brute_force_nearest
from spateval.synthetic import GROUND, BUILDING, SceneSpec, generate_scene, random_scene, write_scene

from conftest import record_criterion


def _brute_force_all(points, queries):
    """Nearest distance of every query by exhaustive scan, in row chunks."""
    if len(points) == 0:
        return np.full(len(queries), math.inf)
    out = np.empty(len(queries))
    for start in range(0, len(queries), 256):
        q = queries[start:start + 256]
        d = q[:, None, :] - points[None, :, :]
        out[start:start + 256] = np.sqrt(d[..., 0] * d[..., 0] + d[..., 1] * d[..., 1] + d[..., 2] * d[..., 2]).min(axis=1)
    return out


def test_ac1_oracle_equivalence():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    bundles_equal = True
    for trial in range(50):
        n = int(rng.integers(50, 2001))
        k = int(rng.integers(3, 9))
        extent = float(rng.choice([5.0, 50.0, 500.0]))
        pos = rng.uniform(0, extent, (n, 3))
        if trial % 5 == 0:
            pos = np.round(pos, 1)
        gt = rng.integers(0, k, n)
        if trial % 7 == 0:
            gt[gt == k - 1] = 0  # leave one class without ground truth
        cloud = LabeledCloud(pos, gt, k)
        ix = build_class_indexes(cloud)
        for c in range(k):
            fast = ix.nearest_distances(c, pos)
            slow = _brute_force_all(pos[gt == c], pos)
            both_inf = np.isinf(fast) & np.isinf(slow)
            assert np.array_equal(np.isinf(fast), np.isinf(slow))
            if (~both_inf).any():
                worst = max(worst, float(np.max(np.abs(fast[~both_inf] - slow[~both_inf]))))
        tau = ThresholdConfig.from_sequence(rng.uniform(0.5, extent / 4, k))
        for m in range(2):
            pred = np.where(rng.random(n) < rng.uniform(0.05, 0.6), rng.integers(0, k, n), gt)
            p = PredictionSet(f"m{m}", pred)
            scope = np.ones(n, bool) if m == 0 else rng.random(n) < 0.5
            fast = class_distance_stats(cloud, p, scope, ix, tau)
            slow = naive_distance_stats(pos, gt, pred, scope, tau.as_array(k), k)
            bundles_equal &= fast == slow
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and bundles_equal and elapsed < 60.0
    record_criterion(1, "oracle equivalence", ok,
                     f"max |index - brute| = {worst:.2e} m, bundles equal = {bundles_equal}, {elapsed:.1f} s")
    assert worst <= 1e-9
    assert bundles_equal
    assert elapsed < 60.0


def test_ac2_hand_fixtures(mde_scene):
    cloud, pred, tau = mde_scene
    s = class_distance_stats(cloud, pred, None, build_class_indexes(cloud), tau)[0]
    mde_ok = (s.mde, s.rho, s.mu) == (1.5, 0.5, 1.0)

    one = LabeledCloud(np.array([(0.0, 0.0, 0.0)]), np.array([0]), 1)
    nn_ok = nearest_distance(build_class_indexes(one), 0, (3.0, 4.0, 0.0)) == 5.0

    cm = confusion_matrix([0, 0, 1], [0, 1, 1], None, 2)
    cm_ok = cm.counts.tolist() == [[1, 1], [0, 1]] and overall_accuracy(cm) == 2 / 3 \
        and iou_per_class(cm) == {0: 0.5, 1: 0.5}
    record_criterion(2, "hand-computable fixtures", mde_ok and nn_ok and cm_ok,
                     f"MDE/rho/mu = {s.mde}/{s.rho}/{s.mu}")
    assert mde_ok and nn_ok and cm_ok


def test_ac3_hard_points_algebra():
    rng = np.random.default_rng(3)
    failures = []
    for trial in range(100):
        n = int(rng.integers(10, 600))
        k = int(rng.integers(2, 8))
        cloud = LabeledCloud(rng.uniform(0, 30, (n, 3)), rng.integers(0, k, n), k)
        preds = []
        for m in range(3):
            pred = np.where(rng.random(n) < rng.uniform(0, 0.3), rng.integers(0, k, n), cloud.gt_labels)
            preds.append(PredictionSet(f"m{m}", pred))
        hard = compute_hard_points(cloud, preds)
        union = set()
        for p in preds:
            union |= {i for i in range(n) if p.pred_labels[i] != cloud.gt_labels[i]}
        if set(hard.indices.tolist()) != union:
            failures.append((trial, "union"))
        h = hard.selected_count
        for p in preds:
            full = confusion_matrix(cloud.gt_labels, p.pred_labels, None, k)
            sub = confusion_matrix(cloud.gt_labels, p.pred_labels, hard.mask, k)
            if not (np.array_equal(full.fp, sub.fp) and np.array_equal(full.fn, sub.fn)):
                failures.append((trial, "fp/fn"))
            errors = int((p.pred_labels != cloud.gt_labels).sum())
            oa = overall_accuracy(sub)
            if h and oa * h + errors != h:
                failures.append((trial, "oa", oa * h + errors, h))
    record_criterion(3, "hard-points algebra", not failures, f"{len(failures)} violations in 100 instances")
    assert not failures


def test_ac4_equal_iou_different_mde():
    scene = generate_scene(SceneSpec(seed=1))
    ctx = validate_inputs(scene.cloud, scene.predictions, scene.config.thresholds, scene.config.class_names)
    report = evaluate(ctx, "both")
    full = report.scope("full")
    a = full.per_model["boundary-confuser"]
    b = full.per_model["blob-confuser"]
    same_cm = a.confusion == b.confusion
    same_cls = a.classification == b.classification
    ratio = b.distance.mmde / a.distance.mmde
    rho_gap = min(b.distance[c].rho - a.distance[c].rho for c in (GROUND, BUILDING))
    hard = report.scope("hard")
    hard_ratio = hard.per_model["blob-confuser"].distance.mmde / hard.per_model["boundary-confuser"].distance.mmde
    ok = same_cm and same_cls and ratio >= 2.0 and rho_gap >= 0.3 and hard_ratio >= 2.0
    record_criterion(4, "equal IoU, different MDE", ok,
                     f"mIoU {a.classification.mean_iou:.6f} both; mMDE ratio {ratio:.2f} (hard {hard_ratio:.2f}); "
                     f"rho gap {rho_gap:.2f}")
    assert same_cm and same_cls
    assert ratio >= 2.0 and hard_ratio >= 2.0
    assert rho_gap >= 0.3


def test_ac5_clipping_and_range_invariants():
    rng = np.random.default_rng(5)
    violations = []
    for trial in range(1000):
        n = int(rng.integers(2, 120))
        k = int(rng.integers(2, 6))
        cloud = LabeledCloud(rng.uniform(0, 15, (n, 3)), rng.integers(0, k, n), k)
        pred = PredictionSet("m", np.where(rng.random(n) < 0.4, rng.integers(0, k, n), cloud.gt_labels))
        taus = rng.uniform(0.2, 6.0, k)
        tau = ThresholdConfig.from_sequence(taus)
        ix = build_class_indexes(cloud)
        d = point_distances(cloud, pred, ix, tau)
        b = aggregate_distance_stats(d, k)
        if np.any(d.clipped > taus[pred.pred_labels]):
            violations.append((trial, "clip"))
        for s in b.per_class:
            t = taus[s.class_id]
            if s.mde is not None and not 0.0 <= s.mde <= t:
                violations.append((trial, "mde"))
            if s.rho is not None and not 0.0 <= s.rho <= 1.0:
                violations.append((trial, "rho"))
            if s.mu is not None and not 0.0 < s.mu <= t:
                violations.append((trial, "mu"))
        perfect = class_distance_stats(cloud, PredictionSet("p", cloud.gt_labels), None, ix, tau)
        if perfect.mmde != 0.0:
            violations.append((trial, "perfect"))
        b2 = class_distance_stats(cloud, pred, None, ix, ThresholdConfig.from_sequence(2 * taus))
        for s, s2 in zip(b.per_class, b2.per_class):
            if s.mde is not None and s2.mde < s.mde:
                violations.append((trial, "mde monotone"))
            if s.rho is not None and s2.rho > s.rho:
                violations.append((trial, "rho monotone"))
            if s.error_count != s2.error_count:
                violations.append((trial, "error count"))
    record_criterion(5, "clipping and range invariants", not violations, f"{len(violations)} violations in 1000 trials")
    assert not violations


def test_ac6_determinism_across_threads(tmp_path):
    paths = write_scene(generate_scene(SceneSpec(seed=1)), tmp_path / "scene")
    outputs = {}
    for threads in (1, 8):
        for fmt in ("json", "csv"):
            out = tmp_path / f"r{threads}.{fmt}"
            assert cli.main(["evaluate", "--input", str(paths["scene"]), "--config", str(paths["config"]),
                             "--scope", "both", "--threads", str(threads), "--output", str(out),
                             "--format", fmt]) == 0
            outputs[threads, fmt] = out.read_bytes()
    ok = all(outputs[1, f] == outputs[8, f] for f in ("json", "csv"))
    record_criterion(6, "determinism (--threads 1 vs 8)", ok, "json and csv reports byte-identical" if ok else "")
    assert ok


def test_ac7_tile_merge():
    rng = np.random.default_rng(7)
    mismatches = 0
    for trial in range(200):
        k = int(rng.integers(2, 6))
        pool = rng.integers(0, 20, (60, 3)).astype(float) * 0.25
        tiles = []
        for _ in range(int(rng.integers(1, 6))):
            idx = rng.choice(len(pool), int(rng.integers(1, 40)), replace=False)
            raw = rng.random((len(idx), k))
            tiles.append(Tile(pool[idx], {"m": raw / raw.sum(axis=1, keepdims=True)}))
        merged = merge_tile_predictions(TileStack(tuple(tiles), k))
        rows = {}
        for t in tiles:
            for p, r in zip(map(tuple, t.positions), t.probabilities["m"]):
                rows.setdefault(p, []).append(r)
        for p, label in zip(map(tuple, merged.positions), merged.predictions[0].pred_labels):
            mismatches += int(label != int(np.argmax(np.mean(rows[p], axis=0))))
    tie = merge_tile_predictions(TileStack((
        Tile(np.zeros((1, 3)), {"m": np.array([[0.9, 0.1]])}),
        Tile(np.zeros((1, 3)), {"m": np.array([[0.1, 0.9]])}),
    ), 2)).predictions[0].pred_labels.tolist()
    ok = mismatches == 0 and tie == [0]
    record_criterion(7, "tile-merge correctness", ok, f"{mismatches} label mismatches; tie -> class {tie[0]}")
    assert mismatches == 0
    assert tie == [0]


@pytest.mark.slow
def test_ac8_desk_scale_performance(tmp_path, capsys):
    n, k = 1_000_000, 8
    cloud, preds, tau = random_scene(n, k, n_models=2, error_rate=0.05, extent=1000.0, seed=8)
    table = tmp_path / "big.csv"
    write_cloud_file(table, cloud, preds)
    cfg = tmp_path / "big.toml"
    cfg.write_text(config_to_toml(config_from_dict(
        {"classes": [{"id": c, "name": f"c{c}", "tau": tau[c]} for c in range(k)]})))
    t0 = time.perf_counter()
    code = cli.main(["evaluate", "--input", str(table), "--config", str(cfg), "--scope", "both",
                     "--output", str(tmp_path / "big.json")])
    elapsed = time.perf_counter() - t0
    capsys.readouterr()

    ix = build_class_indexes(cloud)
    q = cloud.positions[:200_000]
    t1 = time.perf_counter()
    ix.nearest_distances(0, q, workers=1)
    rate = len(q) / (time.perf_counter() - t1)
    # Linear extrapolation only; a 966.30M-point test set is not run.
    hours = 966.30e6 / rate / 3600
    ok = code == 0 and elapsed < 30.0
    record_criterion(8, "desk-scale performance (1M points, 8 classes, 2 models)", ok,
                     f"evaluate --scope both took {elapsed:.1f} s; single-thread query rate "
                     f"{rate:,.0f}/s (~{hours:.2f} h to query 966.30M points, not asserted)")
    assert code == 0
    assert elapsed < 30.0
