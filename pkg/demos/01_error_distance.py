"""
Error distance: a rooftop error versus a boundary error
=======================================================

Two building points are both mislabeled as ground.  Conventional metrics
count them the same; their distance to the nearest true ground point does not.
"""

# %%
# A flat ground patch and a 10 m tall building next to it.
import numpy as np

from spateval import (
    LabeledCloud,
    PredictionSet,
    ThresholdConfig,
    build_class_indexes,
    class_distance_stats,
    point_distances,
)

GROUND, BUILDING = 0, 1
g = np.arange(0.0, 10.0, 1.0)
gx, gy = np.meshgrid(g, g)
ground = np.column_stack([gx.ravel(), gy.ravel(), np.zeros(gx.size)])
roof = np.column_stack([gx.ravel() + 12.0, gy.ravel(), np.full(gx.size, 10.0)])
wall = np.array([[10.0, 5.0, 0.5]])

positions = np.concatenate([ground, roof, wall])
gt = np.array([GROUND] * len(ground) + [BUILDING] * (len(roof) + 1))
cloud = LabeledCloud(positions, gt, 2)

# %%
# Point A sits on the roof, point B at the foot of the wall.  Both are
# predicted as ground.
a = len(ground) + 45
b = len(positions) - 1
pred = gt.copy()
pred[[a, b]] = GROUND
model = PredictionSet("model", pred)

# %%
# Per-point raw and clipped distances (ground threshold 2 m).
tau = ThresholdConfig({GROUND: 2.0, BUILDING: 10.0})
indexes = build_class_indexes(cloud)
d = point_distances(cloud, model, indexes, tau)
for name, i in (("A (rooftop)", a), ("B (boundary)", b)):
    r = d.record(i)
    print(f"{name:13s} raw {r.raw_distance:6.2f} m  clipped {r.clipped_distance:4.2f} m  distant={r.is_distant}")

# %%
# Class summary for "ground": one distant error (rho = 0.5) and one near
# error whose distance is mu.
s = class_distance_stats(cloud, model, None, indexes, tau)[GROUND]
print(f"MDE_ground = {s.mde:.4f} m, rho = {s.rho}, mu = {s.mu:.3f} m")
