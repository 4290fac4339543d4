"""Occlusion-aware multi-person pose tracking with scale-normalised chip planning."""

from .assignment import assign
from .errors import ConfigError, EvaluationInputError, OcctrackError, PlanningError, StreamFormatError
from .geometry import Box, Keypoint, Pose, iou, iou_matrix, object_scale
from .metrics import EvalConfig, MotAccumulator, MotReport, average_precision, evaluate, match_frame, pose_ap
from .occlusion import OcclusionConfig, count_valid_keypoints, reid_is_valid, valid_mask
from .records import Detection, FrameObservations, TrackedFrame
from .sifp import SifpConfig, SifpPlan, assign_fpn_level, plan, rescaled_valid, scale_histogram
from .simulator import ScenarioConfig, generate
from .streams import read_stream, write_stream
from .tracker import Mode, Tracker, TrackerConfig, TrackerState, matching_cost, mixed_similarity, step, track_frames

__version__ = "0.1.0"

__all__ = [
    "Box", "ConfigError", "Detection", "EvalConfig", "EvaluationInputError", "FrameObservations", "Keypoint",
    "Mode", "MotAccumulator", "MotReport", "OcclusionConfig", "OcctrackError", "PlanningError", "Pose",
    "ScenarioConfig", "SifpConfig", "SifpPlan", "StreamFormatError", "TrackedFrame", "Tracker", "TrackerConfig",
    "TrackerState", "assign", "assign_fpn_level", "average_precision", "count_valid_keypoints", "evaluate",
    "generate", "iou", "iou_matrix", "match_frame", "matching_cost", "object_scale", "plan", "pose_ap",
    "read_stream", "reid_is_valid", "rescaled_valid", "scale_histogram", "mixed_similarity", "step",
    "track_frames", "valid_mask", "write_stream",
]
