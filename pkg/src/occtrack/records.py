"""Per-frame records exchanged between the reader, tracker, evaluator and writer."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import StreamFormatError
from .geometry import Box, Pose

# Re-normalisation is skipped when the norm is already this close to 1 so
# that canonical streams survive a read/write cycle bit-for-bit.
_NORM_SLACK = 1e-12


def normalize_feature(values) -> np.ndarray:
    """Return a read-only unit-norm float64 copy of ``values``."""
    v = np.array(values, dtype=np.float64).reshape(-1)
    if v.size == 0:
        raise StreamFormatError("empty Re-ID feature", field="reid")
    if not np.all(np.isfinite(v)):
        raise StreamFormatError("non-finite Re-ID component", field="reid")
    norm = float(np.sqrt(np.dot(v, v)))
    if norm == 0.0:
        raise StreamFormatError("zero Re-ID feature cannot be normalised", field="reid")
    if abs(norm - 1.0) > _NORM_SLACK:
        v = v / norm
    v.setflags(write=False)
    return v


@dataclass(frozen=True, eq=False)
class Detection:
    """One person observed in one frame.

    ``reid`` is stored unit-normalised. ``track_id`` and ``occluded`` are only
    populated on labelled streams (tracker output, simulator ground truth).
    """

    box: Box
    pose: Pose
    reid: np.ndarray
    score: float = 1.0
    track_id: int | None = None
    occluded: bool | None = None

    @classmethod
    def create(cls, box, keypoints, reid, score=1.0, track_id=None, occluded=None) -> "Detection":
        if not isinstance(box, Box):
            box = Box(*(float(v) for v in box))
        if not isinstance(keypoints, Pose):
            keypoints = Pose(keypoints)
        score = float(score)
        if not 0.0 <= score <= 1.0:
            raise StreamFormatError(f"score {score} outside [0, 1]", field="score")
        return cls(box, keypoints, normalize_feature(reid), score, track_id, occluded)

    def with_id(self, track_id: int) -> "Detection":
        return Detection(self.box, self.pose, self.reid, self.score, track_id, self.occluded)

    def __eq__(self, other):
        if not isinstance(other, Detection):
            return NotImplemented
        return (
            self.box == other.box
            and self.pose == other.pose
            and np.array_equal(self.reid, other.reid)
            and self.score == other.score
            and self.track_id == other.track_id
            and self.occluded == other.occluded
        )


@dataclass
class FrameObservations:
    seq: str
    frame: int
    detections: list[Detection] = field(default_factory=list)


@dataclass
class TrackedFrame:
    seq: str
    frame: int
    tracks: list[tuple[int, Detection]] = field(default_factory=list)

    def labelled(self) -> FrameObservations:
        """The same frame as an id-labelled observation record."""
        return FrameObservations(self.seq, self.frame, [d.with_id(i) for i, d in self.tracks])
