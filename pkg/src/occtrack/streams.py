"""Newline-delimited JSON frame streams.

One frame per line::

    {"seq": "cam0", "frame": 0, "detections": [
        {"box": [x0, y0, x1, y1], "score": 0.9,
         "keypoints": [[x, y, c], ...], "reid": [...]}]}

Labelled streams (tracker output, ground truth) add ``"id"`` to each
detection, and simulator ground truth adds ``"occluded"``. Unknown fields are
ignored. The writer emits a canonical form (fixed key order, compact
separators, shortest round-trip floats), so reading and re-writing a
canonical stream reproduces it byte for byte.
"""

from __future__ import annotations

import contextlib
import json
import sys
from typing import Iterable, Iterator

import numpy as np

from .errors import StreamFormatError
from .geometry import Box, Pose
from .records import Detection, FrameObservations, TrackedFrame, normalize_feature


@contextlib.contextmanager
def _open(source, mode):
    if source is None or source == "-":
        yield sys.stdin if "r" in mode else sys.stdout
    elif hasattr(source, "read") or hasattr(source, "write"):
        yield source
    else:
        with open(source, mode, encoding="utf-8") as fh:
            yield fh


def _number(value, field, line):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise StreamFormatError(f"expected a number, got {value!r}", line=line, field=field)
    return float(value)


def _parse_detection(raw, line, n_keypoints, reid_dim):
    if not isinstance(raw, dict):
        raise StreamFormatError("detection must be an object", line=line, field="detections")
    for key in ("box", "keypoints", "reid"):
        if key not in raw:
            raise StreamFormatError("missing", line=line, field=key)

    box = raw["box"]
    if not isinstance(box, list) or len(box) != 4:
        raise StreamFormatError("expected [x0, y0, x1, y1]", line=line, field="box")
    coords = [_number(v, "box", line) for v in box]
    try:
        box = Box(*coords)
    except StreamFormatError as e:
        raise StreamFormatError(str(e).split(": ", 1)[-1], line=line, field="box") from None

    kps = raw["keypoints"]
    if not isinstance(kps, list) or any(not isinstance(k, list) or len(k) != 3 for k in kps):
        raise StreamFormatError("expected a list of [x, y, c] triples", line=line, field="keypoints")
    if n_keypoints is not None and len(kps) != n_keypoints:
        raise StreamFormatError(
            f"expected {n_keypoints} keypoints, got {len(kps)}", line=line, field="keypoints"
        )
    rows = [[_number(v, "keypoints", line) for v in k] for k in kps]
    try:
        pose = Pose(np.array(rows, dtype=np.float64).reshape(-1, 3))
    except StreamFormatError as e:
        raise StreamFormatError(str(e).split(": ", 1)[-1], line=line, field="keypoints") from None

    reid = raw["reid"]
    if not isinstance(reid, list):
        raise StreamFormatError("expected a list of numbers", line=line, field="reid")
    if reid_dim is not None and len(reid) != reid_dim:
        raise StreamFormatError(f"expected {reid_dim} values, got {len(reid)}", line=line, field="reid")
    try:
        feature = normalize_feature([_number(v, "reid", line) for v in reid])
    except StreamFormatError as e:
        raise StreamFormatError(str(e).split(": ", 1)[-1], line=line, field="reid") from None

    score = _number(raw.get("score", 1.0), "score", line)
    if not 0.0 <= score <= 1.0:
        raise StreamFormatError(f"{score} outside [0, 1]", line=line, field="score")

    track_id = raw.get("id")
    if track_id is not None and (isinstance(track_id, bool) or not isinstance(track_id, int)):
        raise StreamFormatError(f"expected an integer, got {track_id!r}", line=line, field="id")
    occluded = raw.get("occluded")
    if occluded is not None and not isinstance(occluded, bool):
        raise StreamFormatError(f"expected a boolean, got {occluded!r}", line=line, field="occluded")
    return Detection(box, pose, feature, score, track_id, occluded)


def read_stream(source=None, n_keypoints: int | None = 15, reid_dim: int | None = None) -> Iterator[FrameObservations]:
    """Yield validated frames from a path, an open file, or stdin (``None``/``"-"``).

    ``reid_dim=None`` fixes the dimension from the first feature seen.
    Raises :class:`StreamFormatError` naming the line and field of the first
    bad record, or when frame indices stop increasing within a sequence.
    """
    last_frame: dict[str, int] = {}
    with _open(source, "r") as fh:
        for lineno, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            try:
                raw = json.loads(text)
            except json.JSONDecodeError as e:
                raise StreamFormatError(f"invalid JSON ({e.msg})", line=lineno) from None
            if not isinstance(raw, dict):
                raise StreamFormatError("record must be an object", line=lineno)
            seq = raw.get("seq")
            if not isinstance(seq, str):
                raise StreamFormatError("missing or not a string", line=lineno, field="seq")
            frame = raw.get("frame")
            if isinstance(frame, bool) or not isinstance(frame, int) or frame < 0:
                raise StreamFormatError("missing or not a non-negative integer", line=lineno, field="frame")
            if seq in last_frame and frame <= last_frame[seq]:
                raise StreamFormatError(
                    f"frame {frame} does not follow frame {last_frame[seq]} of sequence '{seq}'",
                    line=lineno,
                    field="frame",
                )
            last_frame[seq] = frame
            dets_raw = raw.get("detections")
            if not isinstance(dets_raw, list):
                raise StreamFormatError("missing or not a list", line=lineno, field="detections")
            dets = []
            for d in dets_raw:
                det = _parse_detection(d, lineno, n_keypoints, reid_dim)
                if reid_dim is None:
                    reid_dim = det.reid.shape[0]
                dets.append(det)
            yield FrameObservations(seq, frame, dets)


def _detection_record(d: Detection, track_id=None) -> dict:
    rec = {}
    tid = track_id if track_id is not None else d.track_id
    if tid is not None:
        rec["id"] = int(tid)
    rec["box"] = [float(v) for v in d.box.as_list()]
    rec["score"] = float(d.score)
    rec["keypoints"] = d.pose.array.tolist()
    rec["reid"] = d.reid.tolist()
    if d.occluded is not None:
        rec["occluded"] = bool(d.occluded)
    return rec


def format_frame(frame) -> str:
    if isinstance(frame, TrackedFrame):
        dets = [_detection_record(d, tid) for tid, d in frame.tracks]
    else:
        dets = [_detection_record(d) for d in frame.detections]
    rec = {"seq": frame.seq, "frame": int(frame.frame), "detections": dets}
    return json.dumps(rec, separators=(",", ":"), allow_nan=False)


def write_stream(frames: Iterable, dest=None) -> int:
    """Write frames (observations or tracked) one per line; returns the count."""
    n = 0
    with _open(dest, "w") as fh:
        for frame in frames:
            fh.write(format_frame(frame))
            fh.write("\n")
            n += 1
        fh.flush()
    return n
