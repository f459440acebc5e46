import numpy as np
import pytest

from spateval import (
    LabeledCloud,
    PredictionSet,
    ThresholdConfig,
    build_class_indexes,
    compute_hard_points,
    evaluate,
    evaluate_scoped,
    full_scope,
    point_distances,
    validate_inputs,
)
from spateval.errors import NoModels

from conftest import random_instance


def line_cloud(n=6, n_classes=2):
    pos = np.column_stack([np.arange(n, dtype=float), np.zeros(n), np.zeros(n)])
    return LabeledCloud(pos, np.zeros(n, dtype=int), n_classes)


def errs_at(n, idx):
    pred = np.zeros(n, dtype=int)
    pred[list(idx)] = 1
    return pred


def test_union_of_error_sets():
    cloud = line_cloud()
    a = PredictionSet("A", errs_at(6, [1, 3]))
    b = PredictionSet("B", errs_at(6, [3, 4]))
    hard = compute_hard_points(cloud, [a, b])
    assert hard.indices.tolist() == [1, 3, 4]
    assert hard.selected_count == 3 and hard.label == "hard"
    assert compute_hard_points(cloud, [a]).indices.tolist() == [1, 3]


def test_perfect_models_give_empty_scope():
    cloud = line_cloud()
    hard = compute_hard_points(cloud, [PredictionSet("A", np.zeros(6, int))])
    assert hard.selected_count == 0


def test_no_models():
    with pytest.raises(NoModels):
        compute_hard_points(line_cloud(), [])


def test_full_scope_perfect_model():
    cloud = line_cloud()
    p = PredictionSet("A", np.zeros(6, int))
    tau = ThresholdConfig({0: 1.0, 1: 1.0})
    res = evaluate_scoped(cloud, [p], full_scope(6), build_class_indexes(cloud), tau)
    m = res.per_model["A"]
    assert m.classification.overall_accuracy == 1.0
    assert m.distance.mmde == 0.0


def test_empty_scope_reports_undefined():
    cloud = line_cloud()
    p = PredictionSet("A", np.zeros(6, int))
    tau = ThresholdConfig({0: 1.0, 1: 1.0})
    ctx = validate_inputs(cloud, [p], tau)
    hard = evaluate(ctx, "hard").scope("hard")
    assert hard.selected_count == 0
    m = hard.per_model["A"]
    assert m.classification.overall_accuracy is None and m.classification.mean_iou is None
    assert m.distance.mmde is None
    assert all(s.mde is None for s in m.distance.per_class)


@pytest.mark.parametrize("seed", range(20))
def test_error_preservation_and_oa_relation(seed):
    cloud, preds, tau = random_instance(seed)
    ctx = validate_inputs(cloud, preds, tau)
    report = evaluate(ctx, "both")
    full, hard = report.scope("full"), report.scope("hard")
    h = hard.selected_count
    outside = ~hard.scope.mask
    for p in preds:
        assert np.all(p.pred_labels[outside] == cloud.gt_labels[outside])
        f, g = full.per_model[p.model_name], hard.per_model[p.model_name]
        assert np.array_equal(f.confusion.fp, g.confusion.fp)
        assert np.array_equal(f.confusion.fn, g.confusion.fn)
        assert np.all(g.confusion.tp <= f.confusion.tp)
        assert f.error_count == g.error_count
        if h:
            assert g.classification.overall_accuracy * h + g.error_count == pytest.approx(h, abs=1e-9)
        # per-class error counts are scope independent as well
        for a, b in zip(f.distance.per_class, g.distance.per_class):
            assert (a.error_count, a.distant_count) == (b.error_count, b.distant_count)


def test_adding_a_model_never_shrinks_hard_set():
    cloud, preds, _ = random_instance(7)
    small = compute_hard_points(cloud, preds[:2]).mask
    big = compute_hard_points(cloud, preds).mask
    assert np.all(big[small])


def test_hard_scope_distances_use_full_ground_truth():
    # The nearest class-1 point is outside the hard set; it must still be found.
    pos = np.array([(0.0, 0, 0), (1.0, 0, 0), (50.0, 0, 0)])
    cloud = LabeledCloud(pos, np.array([0, 1, 1]), 2)
    p = PredictionSet("A", [1, 1, 1])
    tau = ThresholdConfig({0: 100.0, 1: 100.0})
    r = evaluate(validate_inputs(cloud, [p], tau), "hard").scope("hard")
    assert r.selected_count == 1
    assert r.per_model["A"].distance[1].mu == 1.0


def test_precomputed_distances_give_same_result():
    cloud, preds, tau = random_instance(9)
    ix = build_class_indexes(cloud)
    scope = compute_hard_points(cloud, preds)
    pre = {p.model_name: point_distances(cloud, p, ix, tau) for p in preds}
    assert evaluate_scoped(cloud, preds, scope, ix, tau) == evaluate_scoped(cloud, preds, scope, ix, tau, distances=pre)
