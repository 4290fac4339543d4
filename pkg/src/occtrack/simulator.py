"""Deterministic multi-person scenarios with occlusion ground truth.

Persons are boxes moving at constant velocity inside an arena and bouncing
off its walls. Depth order is fixed by identity: a lower id is nearer the
camera. A person is *occluded* in a frame when its box overlaps a nearer
person's box with IoU above ``occlusion_iou_threshold``; its keypoint
confidences then drop below ``occluded_confidence_ceiling`` and its Re-ID
feature is pulled towards the occluder's identity vector.

Random numbers come from numpy's ``Philox`` (Philox4x64-10, a counter-based
generator), seeded directly with ``ScenarioConfig.seed``. Draws happen in a
fixed order, documented in :func:`generate`, so a seed pins every byte of
both output streams.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .geometry import Box, Pose, iou_matrix
from .records import Detection, FrameObservations, normalize_feature

# PoseTrack joint order: r/l ankle, knee, hip, wrist, elbow, shoulder, then
# head_bottom, nose, head_top. Coordinates are fractions of the box.
POSETRACK_TEMPLATE = np.array(
    [
        [0.35, 0.98], [0.37, 0.75], [0.38, 0.52],
        [0.62, 0.52], [0.63, 0.75], [0.65, 0.98],
        [0.15, 0.50], [0.20, 0.35], [0.30, 0.20],
        [0.70, 0.20], [0.80, 0.35], [0.85, 0.50],
        [0.50, 0.17], [0.50, 0.08], [0.50, 0.00],
    ]
)
JOINT_NAMES = (
    "r_ankle", "r_knee", "r_hip", "l_hip", "l_knee", "l_ankle",
    "r_wrist", "r_elbow", "r_shoulder", "l_shoulder", "l_elbow", "l_wrist",
    "head_bottom", "nose", "head_top",
)
HEAD_BOTTOM, HEAD_TOP = 12, 14

LAYOUTS = ("crossing", "random")


def keypoint_template(n: int) -> np.ndarray:
    if n == POSETRACK_TEMPLATE.shape[0]:
        return POSETRACK_TEMPLATE
    # Other schemas: a vertical chain of points down the box centre.
    ys = np.linspace(0.0, 1.0, n)
    return np.stack([np.full(n, 0.5), ys], axis=1)


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 0
    n_persons: int = 6
    n_frames: int = 300
    arena_w: float = 1000.0
    arena_h: float = 600.0
    speed_min: float = 2.0
    speed_max: float = 6.0
    layout: str = "crossing"
    height_min: float = 150.0
    height_max: float = 250.0
    aspect: float = 0.4
    box_jitter: float = 1.0
    keypoint_jitter: float = 1.5
    visible_confidence_min: float = 0.4
    occlusion_iou_threshold: float = 0.3
    reid_noise_sigma: float = 0.05
    occluded_confidence_ceiling: float = 0.15
    occluded_feature_blend: float = 0.7
    detector_fp_rate: float = 0.0
    detector_fn_rate: float = 0.0
    reid_dim: int = 128
    n_keypoints: int = 15
    sequence: str = ""

    def __post_init__(self):
        for name in (
            "detector_fp_rate",
            "detector_fn_rate",
            "occlusion_iou_threshold",
            "occluded_confidence_ceiling",
            "occluded_feature_blend",
            "visible_confidence_min",
        ):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.n_persons < 0 or self.n_frames < 0:
            raise ConfigError("n_persons and n_frames must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.reid_noise_sigma < 0 or self.box_jitter < 0 or self.keypoint_jitter < 0:
            raise ConfigError("noise levels must be non-negative")
        if not 0 < self.speed_min <= self.speed_max:
            raise ConfigError("require 0 < speed_min <= speed_max")
        if not 0 < self.height_min <= self.height_max:
            raise ConfigError("require 0 < height_min <= height_max")
        if self.height_max > self.arena_h or self.height_max * self.aspect > self.arena_w:
            raise ConfigError("persons must fit inside the arena")
        if self.layout not in LAYOUTS:
            raise ConfigError(f"layout must be one of {LAYOUTS}, got {self.layout!r}")
        if self.reid_dim <= 0 or self.n_keypoints <= 0:
            raise ConfigError("reid_dim and n_keypoints must be positive")

    @property
    def sequence_name(self) -> str:
        return self.sequence or f"sim-{self.seed}"


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def _initial_state(cfg: ScenarioConfig, rng):
    n = cfg.n_persons
    h = rng.uniform(cfg.height_min, cfg.height_max, n)
    w = h * cfg.aspect
    speed = rng.uniform(cfg.speed_min, cfg.speed_max, n)
    cx = rng.uniform(w / 2, cfg.arena_w - w / 2)
    if cfg.layout == "crossing":
        # Persons 2k and 2k+1 share horizontal lane k and start walking in
        # opposite directions, so each pair crosses repeatedly.
        lanes = (n + 1) // 2
        lane_h = cfg.arena_h / max(lanes, 1)
        lane = np.arange(n) // 2
        jitter = rng.uniform(-0.05, 0.05, n) * lane_h
        cy = np.clip((lane + 0.5) * lane_h + jitter, h / 2, cfg.arena_h - h / 2)
        sign = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
        vx = sign * speed
        vy = np.zeros(n)
    else:
        cy = rng.uniform(h / 2, cfg.arena_h - h / 2)
        theta = rng.uniform(0.0, 2 * np.pi, n)
        vx = speed * np.cos(theta)
        vy = speed * np.sin(theta)
    return np.stack([cx, cy], 1), np.stack([vx, vy], 1), w, h


def _advance(pos, vel, w, h, arena_w, arena_h):
    pos = pos + vel
    vel = vel.copy()
    half = np.stack([w / 2, h / 2], 1)
    hi = np.array([arena_w, arena_h]) - half
    lo = half
    under = pos < lo
    pos = np.where(under, 2 * lo - pos, pos)
    over = pos > hi
    pos = np.where(over, 2 * hi - pos, pos)
    vel = np.where(under | over, -vel, vel)
    return pos, vel


def trajectories(cfg: ScenarioConfig) -> np.ndarray:
    """Ground-truth boxes, shape ``(n_frames, n_persons, 4)``.

    Consumes the same leading draws as :func:`generate`, so the boxes are
    exactly those of the generated ground truth.
    """
    rng = make_rng(cfg.seed)
    return _trajectories(cfg, rng)


def _trajectories(cfg, rng):
    pos, vel, w, h = _initial_state(cfg, rng)
    out = np.zeros((cfg.n_frames, cfg.n_persons, 4))
    for f in range(cfg.n_frames):
        if f:
            pos, vel = _advance(pos, vel, w, h, cfg.arena_w, cfg.arena_h)
        out[f, :, 0] = pos[:, 0] - w / 2
        out[f, :, 1] = pos[:, 1] - h / 2
        out[f, :, 2] = pos[:, 0] + w / 2
        out[f, :, 3] = pos[:, 1] + h / 2
    return out


def occlusion_state(boxes: np.ndarray, threshold: float):
    """Occluded flags and occluder index for one frame of ``(n, 4)`` boxes.

    Person ``i`` is occluded by the nearer person (lower index) it overlaps
    most, provided that IoU exceeds ``threshold``. Unoccluded persons get
    occluder ``-1``.
    """
    n = boxes.shape[0]
    occluder = np.full(n, -1)
    if n < 2:
        return np.zeros(n, dtype=bool), occluder
    ious = iou_matrix(boxes, boxes)
    for i in range(1, n):
        nearer = ious[i, :i]
        j = int(np.argmax(nearer))
        if nearer[j] > threshold:
            occluder[i] = j
    return occluder >= 0, occluder


def _pose_points(box, template):
    x0, y0, x1, y1 = box
    return np.stack([x0 + template[:, 0] * (x1 - x0), y0 + template[:, 1] * (y1 - y0)], 1)


def _make_detection(box, xy, conf, feature, score=1.0, track_id=None, occluded=None):
    # Keypoints may jitter slightly outside the box; that is fine.
    kps = np.column_stack([xy, conf])
    return Detection(Box(*map(float, box)), Pose._trusted(kps), normalize_feature(feature), float(score), track_id, occluded)


def generate(cfg: ScenarioConfig):
    """Simulate one sequence.

    Draw order: trajectories (heights, speeds, x, layout-specific terms),
    then one identity vector per person; then per frame, each as one array
    over persons in id order: box jitter ``(n, 4)``, keypoint jitter
    ``(n, N_k, 2)``, visible confidences ``(n, N_k)``, occluded confidences
    ``(n, N_k)``, feature noise ``(n, D)``, drop uniforms ``(n,)``; then the
    false-positive uniform, the false-positive box/confidences/feature/score
    if one fires, and a permutation of the frame's detections.

    Returns:
        ``(detections, ground_truth)``: two lists of :class:`FrameObservations`
        sharing frame indices. Ground-truth entries carry ``track_id`` (from
        1) and ``occluded``.
    """
    rng = make_rng(cfg.seed)
    boxes = _trajectories(cfg, rng)
    n, nk, dim = cfg.n_persons, cfg.n_keypoints, cfg.reid_dim
    identities = np.stack([random_unit(rng, dim) for _ in range(n)]) if n else np.zeros((0, dim))
    template = keypoint_template(nk)
    seq = cfg.sequence_name
    blend = cfg.occluded_feature_blend
    det_stream, gt_stream = [], []
    for f in range(cfg.n_frames):
        fb = boxes[f]
        occluded, occluder = occlusion_state(fb, cfg.occlusion_iou_threshold)
        jitter = rng.normal(0.0, cfg.box_jitter, (n, 4))
        kp_noise = rng.normal(0.0, cfg.keypoint_jitter, (n, nk, 2))
        conf_vis = rng.uniform(cfg.visible_confidence_min, 1.0, (n, nk))
        conf_occ = rng.uniform(0.0, cfg.occluded_confidence_ceiling, (n, nk))
        noise = rng.normal(0.0, cfg.reid_noise_sigma, (n, dim))
        drop = rng.uniform(size=n) < cfg.detector_fn_rate

        conf = np.where(occluded[:, None], conf_occ, conf_vis)
        base = identities.copy()
        for p in np.nonzero(occluded)[0]:
            mixed = (1.0 - blend) * identities[p] + blend * identities[occluder[p]]
            base[p] = mixed / np.linalg.norm(mixed)
        features = base + noise
        det_boxes = fb + jitter
        det_boxes = np.concatenate(
            [np.minimum(det_boxes[:, :2], det_boxes[:, 2:]), np.maximum(det_boxes[:, :2], det_boxes[:, 2:])], 1
        )

        dets, gts = [], []
        for p in range(n):
            gt_xy = _pose_points(fb[p], template)
            gts.append(_make_detection(fb[p], gt_xy, conf[p], identities[p], 1.0, p + 1, bool(occluded[p])))
            if not drop[p]:
                dets.append(_make_detection(det_boxes[p], gt_xy + kp_noise[p], conf[p], features[p], 1.0))
        if rng.uniform() < cfg.detector_fp_rate:
            dets.append(_false_positive(cfg, rng, template))
        if len(dets) > 1:
            dets = [dets[i] for i in rng.permutation(len(dets))]
        det_stream.append(FrameObservations(seq, f, dets))
        gt_stream.append(FrameObservations(seq, f, gts))
    return det_stream, gt_stream


def _false_positive(cfg, rng, template):
    h = rng.uniform(cfg.height_min, cfg.height_max)
    w = h * cfg.aspect
    x0 = rng.uniform(0.0, cfg.arena_w - w)
    y0 = rng.uniform(0.0, cfg.arena_h - h)
    box = np.array([x0, y0, x0 + w, y0 + h])
    conf = rng.uniform(0.0, 1.0, cfg.n_keypoints)
    feature = random_unit(rng, cfg.reid_dim)
    score = rng.uniform(0.3, 1.0)
    return _make_detection(box, _pose_points(box, template), conf, feature, score)
