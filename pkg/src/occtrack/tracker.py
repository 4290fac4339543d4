"""Occlusion-aware tracking-by-detection.

Each frame, every live tracklet is scored against every detection with a
cost that mixes box overlap and Re-ID distance::

    cost = theta_pos * (1 - IoU) + (1 - theta_pos) * min(dist, sigma_max) / sigma_max

In ``occlusion_aware`` mode a detection whose pose says it is occluded (see
:mod:`occtrack.occlusion`) has its appearance term replaced by ``1 - IoU``,
and the tracklet it is matched to keeps its previous appearance.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .assignment import STRATEGIES, assign
from .errors import ConfigError, StreamFormatError
from .geometry import Box, boxes_to_array, iou, iou_matrix
from .occlusion import OcclusionConfig, reid_is_valid, valid_mask
from .records import Detection, FrameObservations, TrackedFrame


class Mode(str, Enum):
    IOU_ONLY = "iou_only"
    REID_ALWAYS = "reid_always"
    OCCLUSION_AWARE = "occlusion_aware"


@dataclass(frozen=True)
class TrackerConfig:
    theta_pos: float = 0.5
    sigma_max: float = 2.0
    mode: Mode = Mode.OCCLUSION_AWARE
    cost_gate: float = 0.7
    max_age: int = 10
    min_score: float = 0.0
    assignment: str = "hungarian"
    # 1.0 replaces the tracklet appearance with the matched feature;
    # smaller values blend and re-normalise.
    appearance_blend: float = 1.0
    reid_dim: int = 128
    occlusion: OcclusionConfig = field(default_factory=OcclusionConfig)

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not 0.0 <= self.theta_pos <= 1.0:
            raise ConfigError(f"theta_pos must lie in [0, 1], got {self.theta_pos}")
        if not self.sigma_max > 0.0:
            raise ConfigError(f"sigma_max must be positive, got {self.sigma_max}")
        if not 0.0 <= self.cost_gate <= 1.0:
            raise ConfigError(f"cost_gate must lie in [0, 1], got {self.cost_gate}")
        if self.max_age < 0:
            raise ConfigError(f"max_age must be >= 0, got {self.max_age}")
        if self.assignment not in STRATEGIES:
            raise ConfigError(f"assignment must be one of {STRATEGIES}, got {self.assignment!r}")
        if not 0.0 < self.appearance_blend <= 1.0:
            raise ConfigError(f"appearance_blend must lie in (0, 1], got {self.appearance_blend}")
        if self.reid_dim <= 0:
            raise ConfigError(f"reid_dim must be positive, got {self.reid_dim}")


@dataclass
class Tracklet:
    id: int
    box: Box
    appearance: np.ndarray
    misses: int = 0
    age: int = 1
    history: list[tuple[int, Detection]] = field(default_factory=list)


@dataclass
class TrackerState:
    tracklets: list[Tracklet] = field(default_factory=list)
    next_id: int = 1


def feature_distance(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise StreamFormatError(f"Re-ID dimension mismatch: {a.shape} vs {b.shape}", field="reid")
    d = a - b
    return float(np.sqrt(np.dot(d, d)))


def mixed_similarity(iou_value: float, dist: float, cfg: TrackerConfig = TrackerConfig()) -> float:
    """The mixed score exactly as written: ``theta*IoU + (1-theta)*clipped_dist``.

    Kept for auditing only. It rewards overlap but penalises nothing for
    appearance distance, so the tracker minimises :func:`matching_cost`
    instead.
    """
    return cfg.theta_pos * iou_value + (1.0 - cfg.theta_pos) * min(dist, cfg.sigma_max) / cfg.sigma_max


def _uses_appearance(mode: Mode, valid: bool) -> bool:
    if mode is Mode.IOU_ONLY:
        return False
    if mode is Mode.REID_ALWAYS:
        return True
    return valid


def matching_cost(t: Tracklet, d: Detection, cfg: TrackerConfig = TrackerConfig()) -> float:
    overlap_cost = 1.0 - iou(t.box, d.box)
    valid = cfg.mode is Mode.OCCLUSION_AWARE and reid_is_valid(d.pose, cfg.occlusion)
    if _uses_appearance(cfg.mode, valid):
        app = min(feature_distance(d.reid, t.appearance), cfg.sigma_max) / cfg.sigma_max
    else:
        app = overlap_cost
    return cfg.theta_pos * overlap_cost + (1.0 - cfg.theta_pos) * app


def cost_matrix(tracklets, detections, cfg: TrackerConfig = TrackerConfig(), valid=None) -> np.ndarray:
    """Vectorised :func:`matching_cost` for all tracklet/detection pairs.

    ``valid`` optionally supplies the precomputed per-detection Re-ID gate.
    """
    n, m = len(tracklets), len(detections)
    if n == 0 or m == 0:
        return np.zeros((n, m))
    overlap_cost = 1.0 - iou_matrix(
        boxes_to_array([t.box for t in tracklets]), boxes_to_array([d.box for d in detections])
    )
    if cfg.mode is Mode.IOU_ONLY:
        return overlap_cost
    if valid is None:
        if cfg.mode is Mode.OCCLUSION_AWARE:
            valid = valid_mask(np.stack([d.pose.confidences for d in detections]), cfg.occlusion)
        else:
            valid = np.ones(m, dtype=bool)
    apps = np.stack([t.appearance for t in tracklets])
    feats = np.stack([d.reid for d in detections])
    if apps.shape[1] != feats.shape[1]:
        raise StreamFormatError(
            f"Re-ID dimension mismatch: {apps.shape[1]} vs {feats.shape[1]}", field="reid"
        )
    sq = (apps * apps).sum(1)[:, None] + (feats * feats).sum(1)[None, :] - 2.0 * (apps @ feats.T)
    dist = np.sqrt(np.maximum(sq, 0.0))
    app = np.minimum(dist, cfg.sigma_max) / cfg.sigma_max
    if cfg.mode is Mode.OCCLUSION_AWARE:
        app = np.where(valid[None, :], app, overlap_cost)
    return cfg.theta_pos * overlap_cost + (1.0 - cfg.theta_pos) * app


class Tracker:
    """Online tracker for one sequence.

    Example:
        >>> tracker = Tracker(TrackerConfig(mode="occlusion_aware"))
        >>> for frame in frames:
        ...     out = tracker.update(frame)
    """

    def __init__(self, cfg: TrackerConfig = TrackerConfig(), state: TrackerState | None = None):
        self.cfg = cfg
        self.state = state if state is not None else TrackerState()
        self.last_costs = np.zeros((0, 0))
        self.last_track_ids: list[int] = []

    @property
    def tracklets(self) -> list[Tracklet]:
        return self.state.tracklets

    def _validate(self, detections):
        nk = self.cfg.occlusion.n_keypoints
        for i, d in enumerate(detections):
            if len(d.pose) != nk:
                raise StreamFormatError(
                    f"detection {i} has {len(d.pose)} keypoints, expected {nk}", field="keypoints"
                )
            if d.reid.shape[0] != self.cfg.reid_dim:
                raise StreamFormatError(
                    f"detection {i} has a {d.reid.shape[0]}-d Re-ID feature, expected {self.cfg.reid_dim}",
                    field="reid",
                )

    def update(self, frame: FrameObservations) -> TrackedFrame:
        cfg = self.cfg
        dets = [d for d in frame.detections if d.score >= cfg.min_score]
        # Everything that can raise happens before the state is touched.
        self._validate(dets)
        if dets:
            valid = valid_mask(np.stack([d.pose.confidences for d in dets]), cfg.occlusion)
        else:
            valid = np.zeros(0, dtype=bool)
        tracks = self.state.tracklets
        costs = cost_matrix(tracks, dets, cfg, valid)
        matches = assign(costs, cfg.cost_gate, cfg.assignment)
        self.last_costs = costs
        self.last_track_ids = [t.id for t in tracks]

        det_track = [0] * len(dets)
        matched_tracks = set()
        for ti, di in matches:
            t, d = tracks[ti], dets[di]
            t.box = d.box
            t.misses = 0
            t.history.append((frame.frame, d))
            if cfg.mode is not Mode.OCCLUSION_AWARE or valid[di]:
                t.appearance = self._blend(t.appearance, d.reid)
            matched_tracks.add(ti)
            det_track[di] = t.id

        survivors = []
        for ti, t in enumerate(tracks):
            t.age += 1
            if ti not in matched_tracks:
                t.misses += 1
                if t.misses > cfg.max_age:
                    continue
            survivors.append(t)

        for di, d in enumerate(dets):
            if det_track[di]:
                continue
            t = Tracklet(self.state.next_id, d.box, d.reid, history=[(frame.frame, d)])
            self.state.next_id += 1
            survivors.append(t)
            det_track[di] = t.id

        self.state.tracklets = survivors
        return TrackedFrame(frame.seq, frame.frame, list(zip(det_track, dets)))

    def _blend(self, old: np.ndarray, new: np.ndarray) -> np.ndarray:
        w = self.cfg.appearance_blend
        if w == 1.0:
            return new
        v = w * new + (1.0 - w) * old
        v = v / np.sqrt(np.dot(v, v))
        v.setflags(write=False)
        return v


def step(state: TrackerState, frame: FrameObservations, cfg: TrackerConfig = TrackerConfig()):
    """Functional form of :meth:`Tracker.update`; ``state`` is left untouched.

    Returns:
        ``(new_state, tracked_frame)``
    """
    new_state = TrackerState(
        [copy.copy(t) for t in state.tracklets],
        state.next_id,
    )
    for t in new_state.tracklets:
        t.history = list(t.history)
    out = Tracker(cfg, new_state).update(frame)
    return new_state, out


def track_frames(frames, cfg: TrackerConfig = TrackerConfig()):
    """Track an iterable of frames, one independent tracker per sequence id."""
    trackers: dict[str, Tracker] = {}
    for frame in frames:
        tr = trackers.get(frame.seq)
        if tr is None:
            tr = trackers[frame.seq] = Tracker(cfg)
        yield tr.update(frame)
