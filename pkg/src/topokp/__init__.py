"""Topological keypoint engine.

Sublevel-set persistence of 2D height maps on a cubical grid complex, a
differentiable loss that sharpens and aligns the resulting saddle-maximum
pairs across two maps, keypoint extraction, and repeatability evaluation.
"""

__version__ = "0.1.0"

from .detect import DetectConfig, Keypoint, nms_keypoints, persistence_keypoints, truncate_keypoints
from .evaluation import (
    EvalConfig,
    Homography,
    RepeatabilityScores,
    ScaleEntry,
    build_correspondence_map,
    classic_repeatability,
    mutual_nn_repeatability,
    scale_experiment,
    warp_points,
)
from .grid import Cell, DimensionError, FiltrationOrder, HeightMap, build_filtration, vertex_order
from .loss import (
    CorrespondenceMap,
    GradCheckResult,
    LossConfig,
    LossResult,
    LossTerm,
    detector_loss,
    gradient_check,
    symmetrized_loss,
)
from .optimize import DivergenceError, OptimizeConfig, OptimizeResult, StepRecord, optimize_pair
from .persistence import (
    PersistenceDiagram,
    PersistencePair,
    h0_pairs,
    h1_generators,
    oracle_diagram,
    pairing_mismatch,
    reduce_boundary_matrix,
)
from .synth import Scene, SynthConfig, gaussian_bump_map, make_scene, warp_height_map, write_scene

__all__ = [
    "__version__",
    "Cell",
    "CorrespondenceMap",
    "DetectConfig",
    "DimensionError",
    "DivergenceError",
    "EvalConfig",
    "FiltrationOrder",
    "GradCheckResult",
    "HeightMap",
    "Homography",
    "Keypoint",
    "LossConfig",
    "LossResult",
    "LossTerm",
    "OptimizeConfig",
    "OptimizeResult",
    "PersistenceDiagram",
    "PersistencePair",
    "RepeatabilityScores",
    "ScaleEntry",
    "Scene",
    "StepRecord",
    "SynthConfig",
    "build_correspondence_map",
    "build_filtration",
    "classic_repeatability",
    "detector_loss",
    "gaussian_bump_map",
    "gradient_check",
    "h0_pairs",
    "h1_generators",
    "make_scene",
    "mutual_nn_repeatability",
    "nms_keypoints",
    "oracle_diagram",
    "optimize_pair",
    "pairing_mismatch",
    "persistence_keypoints",
    "reduce_boundary_matrix",
    "scale_experiment",
    "symmetrized_loss",
    "truncate_keypoints",
    "vertex_order",
    "warp_height_map",
    "warp_points",
    "write_scene",
]
