"""
Hard points
===========

Restricting the evaluation to points that at least one model gets wrong
removes the easy majority.  False positives and false negatives are kept
exactly; only true positives shrink.
"""

# %%
import numpy as np

from spateval import compute_hard_points, evaluate, validate_inputs
from spateval.synthetic import random_scene

cloud, preds, tau = random_scene(50_000, 5, n_models=3, error_rate=0.03, seed=4)
hard = compute_hard_points(cloud, preds)
print(f"|H| = {hard.selected_count} ({100 * hard.fraction:.2f}% of {cloud.point_count})")

# %%
report = evaluate(validate_inputs(cloud, preds, tau), scope="both")
full, sub = report.scope("full"), report.scope("hard")
for name in report.models:
    f, h = full.per_model[name], sub.per_model[name]
    print(
        f"{name}: OA {f.classification.overall_accuracy:.4f} -> {h.classification.overall_accuracy:.4f}, "
        f"mIoU {f.classification.mean_iou:.4f} -> {h.classification.mean_iou:.4f}, "
        f"mMDE {f.distance.mmde:.4f} -> {h.distance.mmde:.4f} m"
    )
    assert np.array_equal(f.confusion.fp, h.confusion.fp)
    assert np.array_equal(f.confusion.fn, h.confusion.fn)
