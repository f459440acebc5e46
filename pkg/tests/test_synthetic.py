from dataclasses import replace

import numpy as np
import pytest

from spateval import build_class_indexes, compute_hard_points, confusion_matrix, evaluate, validate_inputs
from spateval.errors import SpecError
from spateval.synthetic import (
    BUILDING,
    GROUND,
    ErrorRecipe,
    ModelRecipe,
    SceneSpec,
    generate_scene,
    load_scene_spec,
    random_scene,
    write_scene,
)


@pytest.fixture(scope="module")
def scene():
    return generate_scene(SceneSpec(seed=1))


def test_models_share_confusion_matrix(scene):
    a, b = scene.predictions
    n = scene.cloud.n_classes
    assert confusion_matrix(scene.cloud.gt_labels, a.pred_labels, None, n) == \
        confusion_matrix(scene.cloud.gt_labels, b.pred_labels, None, n)
    assert scene.expected["equal_confusion"]


def test_boundary_errors_are_near_and_blob_errors_distant(scene):
    ctx = validate_inputs(scene.cloud, scene.predictions, scene.config.thresholds, scene.config.class_names)
    full = evaluate(ctx, "full").scope("full")
    band = full.per_model["boundary-confuser"].distance
    blob = full.per_model["blob-confuser"].distance
    for c in (GROUND, BUILDING):
        assert band[c].rho == 0.0 and blob[c].rho == 1.0
        assert band[c].mde < blob[c].mde
    assert band.mmde < blob.mmde


def test_same_seed_same_bytes(tmp_path):
    a = write_scene(generate_scene(SceneSpec(seed=7)), tmp_path / "a")
    b = write_scene(generate_scene(SceneSpec(seed=7)), tmp_path / "b")
    for key in a:
        assert a[key].read_bytes() == b[key].read_bytes()
    c = write_scene(generate_scene(SceneSpec(seed=8)), tmp_path / "c")
    assert a["scene"].read_bytes() != c["scene"].read_bytes()


def test_zero_error_recipe_is_perfect():
    spec = SceneSpec(models=(ModelRecipe("perfect", (ErrorRecipe("band", BUILDING, GROUND, 0, 1.0),)),))
    s = generate_scene(spec)
    assert np.array_equal(s.predictions[0].pred_labels, s.cloud.gt_labels)
    assert compute_hard_points(s.cloud, s.predictions).selected_count == 0


@pytest.mark.parametrize("change", [
    dict(extent=0.0),
    dict(ground_spacing=-1.0),
    dict(models=(ModelRecipe("x", (ErrorRecipe("band", BUILDING, GROUND, 5, 3.0),)),)),
    dict(models=(ModelRecipe("x", (ErrorRecipe("blob", BUILDING, GROUND, 5, 1.0),)),)),
    dict(models=(ModelRecipe("x", (ErrorRecipe("band", BUILDING, GROUND, 10**6, 1.0),)),)),
])
def test_bad_specs(change):
    with pytest.raises(SpecError):
        generate_scene(replace(SceneSpec(), **change))


def test_spec_from_toml(tmp_path):
    path = tmp_path / "spec.toml"
    path.write_text(
        'seed = 3\nextent = 60.0\nn_buildings = 3\n\n'
        '[[models]]\nname = "a"\n[[models.errors]]\nkind = "band"\nsource = 2\ntarget = 0\ncount = 20\ndistance = 1.0\n'
    )
    spec = load_scene_spec(path)
    assert spec.seed == 3 and spec.models[0].errors[0].count == 20
    s = generate_scene(spec)
    assert int((s.predictions[0].pred_labels != s.cloud.gt_labels).sum()) == 20


def test_random_scene_shapes():
    cloud, preds, tau = random_scene(1000, 8, n_models=2, seed=1)
    assert cloud.point_count == 1000 and len(preds) == 2
    assert tau.covers(range(8))
    err = np.mean(preds[0].pred_labels != cloud.gt_labels)
    assert 0.02 < err < 0.09
