"""Spatially-aware evaluation of point-cloud semantic segmentation.

Classification metrics (OA, IoU, mIoU), clipped nearest-neighbor error
distances (MDE, mMDE, rho, mu) and hard-point scoping across several models.
"""

from .class_metrics import (
    ClassificationStats,
    ConfusionMatrix,
    classification_stats,
    confusion_matrix,
    iou_per_class,
    mean_iou,
    overall_accuracy,
)
from .core import (
    ClassPartition,
    EvalContext,
    LabeledCloud,
    PredictionSet,
    partition_by_class,
    validate_inputs,
)
from .distance_metrics import (
    ClassDistanceStats,
    DistanceStatsBundle,
    PointDistanceRecord,
    PointDistances,
    aggregate_distance_stats,
    class_distance_stats,
    clip_distance,
    point_distances,
    raw_error_distance,
)
from .errors import *  # noqa: F401,F403
from .hard_points import (
    EvalScope,
    MetricsReport,
    ModelMetrics,
    ScopeResult,
    compute_hard_points,
    evaluate,
    evaluate_scoped,
    full_scope,
)
from .ingestion import (
    EvalConfig,
    emit_report,
    load_config,
    parse_cloud_file,
    preset_config,
    read_report,
    report_to_dict,
    write_cloud_file,
)
from .spatial_index import (
    ClassIndexSet,
    brute_force_nearest,
    build_class_indexes,
    nearest_distance,
)
from .thresholds import PRESETS, ThresholdConfig, preset
from .tiles import Tile, TileStack, load_tile_stack, merge_tile_predictions

__version__ = "0.1.0"
