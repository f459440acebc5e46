"""
Merging overlapping tile predictions
====================================

Points inside tile overlaps get one probability row per tile.  The rows
are averaged per class and the label is the argmax of the mean.
"""

# %%
import numpy as np

from spateval import Tile, TileStack, merge_tile_predictions

xs = np.arange(0.0, 10.0)
line = np.column_stack([xs, np.zeros_like(xs), np.zeros_like(xs)])
rng = np.random.default_rng(0)


def probs(n):
    p = rng.random((n, 3))
    return p / p.sum(axis=1, keepdims=True)


left = Tile(line[:6], {"net": probs(6)})
right = Tile(line[4:], {"net": probs(6)})
merged = merge_tile_predictions(TileStack((left, right), 3))
print(merged.diagnostics)
print("labels:", merged.predictions[0].pred_labels.tolist())

# %%
# Disagreeing rows that average to a tie resolve to the lowest class id.
tie = merge_tile_predictions(TileStack((
    Tile(np.zeros((1, 3)), {"net": np.array([[0.9, 0.1, 0.0]])}),
    Tile(np.zeros((1, 3)), {"net": np.array([[0.1, 0.9, 0.0]])}),
), 3))
print("tie ->", tie.predictions[0].pred_labels.tolist())
