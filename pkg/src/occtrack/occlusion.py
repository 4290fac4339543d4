"""Occlusion state from keypoint confidences.

A detection's Re-ID feature is trusted only when enough of its keypoints are
confidently visible. Both comparisons are strict: a keypoint is visible when
``c > gamma_valid`` and the feature is valid when the visible count is
``> theta_valid``. Boundary values are therefore *invalid*.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, StreamFormatError
from .geometry import Pose


@dataclass(frozen=True)
class OcclusionConfig:
    gamma_valid: float = 0.2
    theta_valid: int = 10
    n_keypoints: int = 15

    def __post_init__(self):
        if not 0.0 <= self.gamma_valid <= 1.0:
            raise ConfigError(f"gamma_valid must lie in [0, 1], got {self.gamma_valid}")
        if self.n_keypoints <= 0:
            raise ConfigError(f"n_keypoints must be positive, got {self.n_keypoints}")
        if not 0 <= self.theta_valid <= self.n_keypoints:
            raise ConfigError(
                f"theta_valid must lie in [0, n_keypoints={self.n_keypoints}], got {self.theta_valid}"
            )


def _check_length(n: int, cfg: OcclusionConfig):
    if n != cfg.n_keypoints:
        raise StreamFormatError(
            f"pose has {n} keypoints, expected {cfg.n_keypoints}", field="keypoints"
        )


def count_valid_keypoints(pose: Pose, cfg: OcclusionConfig = OcclusionConfig()) -> int:
    _check_length(len(pose), cfg)
    return int(np.count_nonzero(pose.confidences > cfg.gamma_valid))


def reid_is_valid(pose: Pose, cfg: OcclusionConfig = OcclusionConfig()) -> bool:
    return count_valid_keypoints(pose, cfg) > cfg.theta_valid


def valid_mask(confidences: np.ndarray, cfg: OcclusionConfig = OcclusionConfig()) -> np.ndarray:
    """Vectorised gate over an ``(n, N_k)`` confidence matrix."""
    conf = np.asarray(confidences, dtype=np.float64)
    if conf.ndim != 2:
        raise StreamFormatError(f"expected (n, N_k) confidences, got shape {conf.shape}")
    if conf.shape[0]:
        _check_length(conf.shape[1], cfg)
    conf = np.where(np.isfinite(conf), conf, 0.0)
    return np.count_nonzero(conf > cfg.gamma_valid, axis=1) > cfg.theta_valid
