"""CLEAR-MOT tracking metrics and per-joint pose AP.

Person-to-person distance is a PCKh miss rate: the fraction of the
ground-truth person's annotated joints (confidence > 0) that the hypothesis
does *not* place within ``pckh_ratio`` times the head segment length. When
the ground-truth instance has no usable head segment the distance falls back
to ``1 - IoU`` of the boxes. Pairs are matchable when the distance is at most
``threshold``.

Per frame, the matching keeps as many of the previous frame's matches as
possible without reducing the number of matched pairs, then minimises the
summed distance. Because the number of matched pairs never depends on
identities, FP and FN depend only on boxes and poses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .assignment import assign
from .errors import EvaluationInputError
from .geometry import Box, Pose, boxes_to_array, iou_matrix
from .records import FrameObservations


@dataclass(frozen=True)
class EvalConfig:
    threshold: float = 0.5
    pckh_ratio: float = 0.5
    # (head_bottom, head_top) in the pose schema; None when the schema has no head.
    head_joints: tuple[int, int] | None = (12, 14)
    box_ratio: float = 0.2


@dataclass
class FrameMatch:
    matches: list[tuple[int, int, float]]
    unmatched_gt: list[int]
    unmatched_hyp: list[int]

    @property
    def fp(self) -> int:
        return len(self.unmatched_hyp)

    @property
    def fn(self) -> int:
        return len(self.unmatched_gt)


@dataclass
class FrameResult:
    seq: str
    frame: int
    n_gt: int
    n_hyp: int
    matches: list[tuple[int, int, float]]
    ids: int
    joint_scores: np.ndarray
    joint_labels: np.ndarray
    joint_positives: np.ndarray

    @property
    def tp(self) -> int:
        return len(self.matches)

    @property
    def fp(self) -> int:
        return self.n_hyp - self.tp

    @property
    def fn(self) -> int:
        return self.n_gt - self.tp


@dataclass
class MotReport:
    fp: int = 0
    fn: int = 0
    ids: int = 0
    gt_count: int = 0
    tp: int = 0
    mota: float = float("nan")
    mota_defined: bool = False
    motp: float = float("nan")
    precision: float = 0.0
    recall: float = 0.0
    per_joint_ap: list[float] = field(default_factory=list)
    map: float = float("nan")
    frames: int = 0

    def as_dict(self) -> dict:
        return {
            "frames": self.frames,
            "gt_count": self.gt_count,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "ids": self.ids,
            "mota": self.mota,
            "mota_defined": self.mota_defined,
            "motp": self.motp,
            "precision": self.precision,
            "recall": self.recall,
            "map": self.map,
            "per_joint_ap": list(self.per_joint_ap),
        }


def _unpack(entries, kind):
    ids, poses, boxes = [], [], []
    for e in entries:
        i, p, b = e
        ids.append(i)
        poses.append(p if isinstance(p, Pose) else Pose(p))
        boxes.append(b if isinstance(b, Box) else Box(*b))
    if len(set(ids)) != len(ids):
        raise EvaluationInputError(f"duplicate {kind} ids in frame: {ids}")
    return ids, poses, boxes


def _joint_geometry(gt_poses, gt_boxes, hyp_poses, hyp_boxes, cfg: EvalConfig):
    """Distances ``(n, m)``, joint hits ``(n, m, K)`` and annotations ``(n, K)``."""
    n, m = len(gt_poses), len(hyp_poses)
    k = len(gt_poses[0]) if n else (len(hyp_poses[0]) if m else 0)
    for p in list(gt_poses) + list(hyp_poses):
        if len(p) != k:
            raise EvaluationInputError(f"poses with {len(p)} and {k} joints in the same frame")
    gt = np.stack([p.array for p in gt_poses]) if n else np.zeros((0, k, 3))
    annotated = gt[:, :, 2] > 0
    if n == 0 or m == 0:
        return np.zeros((n, m)), np.zeros((n, m, k), dtype=bool), annotated
    hy = np.stack([p.array for p in hyp_poses])
    gb = boxes_to_array(gt_boxes)
    box_ref = cfg.box_ratio * np.sqrt((gb[:, 2] - gb[:, 0]) * (gb[:, 3] - gb[:, 1]))
    if cfg.head_joints is None:
        ref = box_ref
        fallback = np.zeros(n, dtype=bool)
    else:
        hb, ht = cfg.head_joints
        head_len = np.linalg.norm(gt[:, ht, :2] - gt[:, hb, :2], axis=1)
        has_head = annotated[:, hb] & annotated[:, ht] & (head_len > 0)
        ref = np.where(has_head, cfg.pckh_ratio * head_len, box_ref)
        fallback = ~has_head
    n_annot = annotated.sum(1)
    fallback = fallback | (n_annot == 0)

    d = np.linalg.norm(gt[:, None, :, :2] - hy[None, :, :, :2], axis=3)
    hits = (d <= ref[:, None, None]) & annotated[:, None, :]
    frac = hits.sum(2) / np.maximum(n_annot, 1)[:, None]
    dist = 1.0 - frac
    if fallback.any():
        ious = iou_matrix(gb, boxes_to_array(hyp_boxes))
        dist = np.where(fallback[:, None], 1.0 - ious, dist)
    return dist, hits, annotated


def _matching(dist, gt_ids, hyp_ids, threshold, previous):
    n, m = dist.shape
    costs = dist.copy()
    if previous:
        # Persistence bonus larger than any possible spread of summed distances.
        bonus = min(n, m) + 1.0
        col = {h: j for j, h in enumerate(hyp_ids)}
        for i, g in enumerate(gt_ids):
            j = col.get(previous.get(g))
            if j is not None and dist[i, j] <= threshold:
                costs[i, j] -= bonus
    return assign(costs, threshold, "hungarian")


def match_frame(gt, hyp, threshold: float | None = None, previous: dict | None = None, cfg: EvalConfig = EvalConfig()) -> FrameMatch:
    """Match one frame of ``(id, Pose, Box)`` ground truth to hypotheses.

    ``previous`` maps ground-truth ids to the hypothesis ids they were matched
    to in the previous frame; those pairs are kept whenever they are still
    within ``threshold`` and keeping them costs no matched pairs.
    """
    thr = cfg.threshold if threshold is None else threshold
    gt_ids, gt_poses, gt_boxes = _unpack(gt, "ground-truth")
    hyp_ids, hyp_poses, hyp_boxes = _unpack(hyp, "hypothesis")
    dist, _, _ = _joint_geometry(gt_poses, gt_boxes, hyp_poses, hyp_boxes, cfg)
    pairs = _matching(dist, gt_ids, hyp_ids, thr, previous)
    matched_g = {i for i, _ in pairs}
    matched_h = {j for _, j in pairs}
    return FrameMatch(
        [(gt_ids[i], hyp_ids[j], float(dist[i, j])) for i, j in pairs],
        [g for i, g in enumerate(gt_ids) if i not in matched_g],
        [h for j, h in enumerate(hyp_ids) if j not in matched_h],
    )


def _joint_records(dist, hits, annotated, hyp_poses, pairs, k):
    m = len(hyp_poses)
    scores = np.stack([p.confidences for p in hyp_poses]) if m else np.zeros((0, k))
    labels = np.zeros((m, k), dtype=bool)
    for i, j in pairs:
        labels[j] = hits[i, j]
    positives = annotated.sum(0) if annotated.size else np.zeros(k, dtype=np.int64)
    return scores, labels, positives


class MotAccumulator:
    """Frame-by-frame CLEAR-MOT bookkeeping over one or more sequences."""

    def __init__(self, cfg: EvalConfig = EvalConfig()):
        self.cfg = cfg
        self.results: list[FrameResult] = []
        self._previous: dict[str, dict] = {}
        self._last_known: dict[str, dict] = {}

    def update(self, gt, hyp, seq: str = "", frame: int | None = None) -> FrameResult:
        cfg = self.cfg
        gt_ids, gt_poses, gt_boxes = _unpack(gt, "ground-truth")
        hyp_ids, hyp_poses, hyp_boxes = _unpack(hyp, "hypothesis")
        dist, hits, annotated = _joint_geometry(gt_poses, gt_boxes, hyp_poses, hyp_boxes, cfg)
        k = hits.shape[2] if hits.ndim == 3 else 0
        if not k:
            k = len(gt_poses[0]) if gt_poses else (len(hyp_poses[0]) if hyp_poses else 0)
        prev = self._previous.get(seq, {})
        pairs = _matching(dist, gt_ids, hyp_ids, cfg.threshold, prev)
        last = self._last_known.setdefault(seq, {})
        ids = 0
        current = {}
        for i, j in pairs:
            g, h = gt_ids[i], hyp_ids[j]
            if g in last and last[g] != h:
                ids += 1
            last[g] = h
            current[g] = h
        self._previous[seq] = current

        ap_pairs = pairs if not prev else _matching(dist, gt_ids, hyp_ids, cfg.threshold, None)
        scores, labels, positives = _joint_records(dist, hits, annotated, hyp_poses, ap_pairs, k)
        result = FrameResult(
            seq,
            len(self.results) if frame is None else frame,
            len(gt_ids),
            len(hyp_ids),
            [(gt_ids[i], hyp_ids[j], float(dist[i, j])) for i, j in pairs],
            ids,
            scores,
            labels,
            positives,
        )
        self.results.append(result)
        return result

    def report(self) -> MotReport:
        return accumulate(self.results)


def average_precision(scores, labels, n_positive: int) -> float:
    """Area under the interpolated precision/recall curve.

    Detections are ranked by descending score (stable for ties); precision is
    replaced by its running maximum from the right before integrating over
    recall.
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels, dtype=bool).reshape(-1)
    if n_positive <= 0 or scores.size == 0:
        return 0.0
    order = np.argsort(-scores, kind="stable")
    tp = np.cumsum(labels[order])
    precision = tp / np.arange(1, tp.size + 1)
    recall = tp / n_positive
    mrec = np.concatenate([[0.0], recall, [1.0]])
    mpre = np.concatenate([[0.0], precision, [0.0]])
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    step = np.nonzero(mrec[1:] != mrec[:-1])[0] + 1
    return float(np.sum((mrec[step] - mrec[step - 1]) * mpre[step]))


def accumulate(results: Iterable[FrameResult]) -> MotReport:
    results = list(results)
    rep = MotReport(frames=len(results))
    dist_sum = 0.0
    for r in results:
        rep.fp += r.fp
        rep.fn += r.fn
        rep.ids += r.ids
        rep.gt_count += r.n_gt
        rep.tp += r.tp
        dist_sum += math.fsum(d for _, _, d in r.matches)
    if rep.gt_count > 0:
        rep.mota = 1.0 - (rep.fp + rep.fn + rep.ids) / rep.gt_count
        rep.mota_defined = True
        rep.recall = rep.tp / rep.gt_count
    if rep.tp + rep.fp > 0:
        rep.precision = rep.tp / (rep.tp + rep.fp)
    if rep.tp:
        rep.motp = 1.0 - dist_sum / rep.tp

    ks = {r.joint_scores.shape[1] for r in results if r.joint_scores.size} | {
        r.joint_positives.shape[0] for r in results if r.joint_positives.size
    }
    if len(ks) > 1:
        raise EvaluationInputError(f"inconsistent joint counts across frames: {sorted(ks)}")
    if ks:
        k = ks.pop()
        scores = np.concatenate([r.joint_scores.reshape(-1, k) for r in results])
        labels = np.concatenate([r.joint_labels.reshape(-1, k) for r in results])
        positives = np.sum([r.joint_positives.reshape(-1)[:k] if r.joint_positives.size else np.zeros(k, dtype=np.int64) for r in results], axis=0)
        rep.per_joint_ap = [average_precision(scores[:, j], labels[:, j], int(positives[j])) for j in range(k)]
        rep.map = float(np.mean(rep.per_joint_ap))
    return rep


def pose_ap(gt_frames: Sequence, hyp_frames: Sequence, joint: int, cfg: EvalConfig = EvalConfig()) -> float:
    """Average precision of one joint over frames of ``(Pose, Box)`` lists.

    Each hypothesis joint is a detection scored by its keypoint confidence
    and counted correct when its person is matched to a ground-truth person
    and the joint lies within the PCKh radius.
    """
    if len(gt_frames) != len(hyp_frames):
        raise EvaluationInputError("ground truth and hypotheses cover different frame counts")
    all_scores, all_labels, n_pos = [], [], 0
    for gt, hyp in zip(gt_frames, hyp_frames):
        gt_poses = [p if isinstance(p, Pose) else Pose(p) for p, _ in gt]
        gt_boxes = [b if isinstance(b, Box) else Box(*b) for _, b in gt]
        hyp_poses = [p if isinstance(p, Pose) else Pose(p) for p, _ in hyp]
        hyp_boxes = [b if isinstance(b, Box) else Box(*b) for _, b in hyp]
        dist, hits, annotated = _joint_geometry(gt_poses, gt_boxes, hyp_poses, hyp_boxes, cfg)
        pairs = assign(dist, cfg.threshold, "hungarian") if dist.size else []
        k = len(gt_poses[0]) if gt_poses else (len(hyp_poses[0]) if hyp_poses else 0)
        if not k:
            continue
        scores, labels, positives = _joint_records(dist, hits, annotated, hyp_poses, pairs, k)
        all_scores.append(scores[:, joint])
        all_labels.append(labels[:, joint])
        n_pos += int(positives[joint])
    if not all_scores:
        return 0.0
    return average_precision(np.concatenate(all_scores), np.concatenate(all_labels), n_pos)


def _entries(frame: FrameObservations):
    out = []
    for d in frame.detections:
        if d.track_id is None:
            raise EvaluationInputError(f"frame {frame.frame} of '{frame.seq}' has a record without an id")
        out.append((d.track_id, d.pose, d.box))
    return out


def evaluate(gt_frames: Iterable[FrameObservations], hyp_frames: Iterable[FrameObservations], cfg: EvalConfig = EvalConfig()) -> MotReport:
    """Evaluate id-labelled hypothesis frames against ground truth.

    Frames are aligned by ``(seq, frame)``; a ground-truth frame with no
    hypothesis counterpart is evaluated against an empty hypothesis list and
    hypothesis frames without ground truth count entirely as false positives.
    """
    hyp_index = {}
    for h in hyp_frames:
        key = (h.seq, h.frame)
        if key in hyp_index:
            raise EvaluationInputError(f"duplicate hypothesis frame {key}")
        hyp_index[key] = h
    gt_index = {}
    for g in gt_frames:
        key = (g.seq, g.frame)
        if key in gt_index:
            raise EvaluationInputError(f"duplicate ground-truth frame {key}")
        gt_index[key] = g
    seq_order = {}
    for seq, _ in list(gt_index) + list(hyp_index):
        seq_order.setdefault(seq, len(seq_order))
    keys = sorted(set(gt_index) | set(hyp_index), key=lambda kf: (seq_order[kf[0]], kf[1]))
    acc = MotAccumulator(cfg)
    for seq, frame in keys:
        g, h = gt_index.get((seq, frame)), hyp_index.get((seq, frame))
        acc.update(_entries(g) if g else [], _entries(h) if h else [], seq=seq, frame=frame)
    return acc.report()
