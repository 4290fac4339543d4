"""Box and keypoint primitives.

Boxes are corner pairs ``(x_min, y_min, x_max, y_max)`` in pixels. Zero-area
boxes are legal everywhere and simply have IoU 0 with everything, including
themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .errors import StreamFormatError


@dataclass(frozen=True, slots=True)
class Box:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        coords = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(v) for v in coords):
            raise StreamFormatError(f"non-finite box coordinate in {coords}", field="box")
        if self.x_max < self.x_min or self.y_max < self.y_min:
            raise StreamFormatError(f"box corners out of order: {coords}", field="box")

    @classmethod
    def from_xywh(cls, x, y, w, h):
        return cls(float(x), float(y), float(x + w), float(y + h))

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))

    def scaled(self, omega: float) -> "Box":
        return Box(self.x_min * omega, self.y_min * omega, self.x_max * omega, self.y_max * omega)

    def contains(self, other: "Box") -> bool:
        return (
            other.x_min >= self.x_min
            and other.y_min >= self.y_min
            and other.x_max <= self.x_max
            and other.y_max <= self.y_max
        )

    def intersects(self, other: "Box") -> bool:
        return (
            min(self.x_max, other.x_max) > max(self.x_min, other.x_min)
            and min(self.y_max, other.y_max) > max(self.y_min, other.y_min)
        )

    def as_list(self) -> list[float]:
        return [self.x_min, self.y_min, self.x_max, self.y_max]


class Keypoint(NamedTuple):
    x: float
    y: float
    c: float


class Pose:
    """An ordered set of scored keypoints, stored as an ``(N_k, 3)`` array.

    Columns are ``x, y, c``. Non-finite confidences are replaced by 0 on
    construction so downstream counting treats them as invisible.
    """

    __slots__ = ("array",)

    def __init__(self, keypoints):
        arr = np.array(keypoints, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise StreamFormatError(
                f"expected a list of [x, y, c] triples, got shape {arr.shape}", field="keypoints"
            )
        if not np.all(np.isfinite(arr[:, :2])):
            raise StreamFormatError("non-finite keypoint coordinate", field="keypoints")
        conf = arr[:, 2]
        bad = ~np.isfinite(conf)
        if bad.any():
            conf[bad] = 0.0
        if np.any(conf < 0.0) or np.any(conf > 1.0):
            raise StreamFormatError("keypoint confidence outside [0, 1]", field="keypoints")
        arr.setflags(write=False)
        self.array = arr

    @classmethod
    def _trusted(cls, arr: np.ndarray) -> "Pose":
        # Internal fast path for arrays already known to satisfy the invariants.
        self = object.__new__(cls)
        arr = np.ascontiguousarray(arr, dtype=np.float64)
        arr.setflags(write=False)
        self.array = arr
        return self

    @classmethod
    def from_keypoints(cls, keypoints: Iterable[Keypoint]) -> "Pose":
        return cls([tuple(k) for k in keypoints])

    def __len__(self) -> int:
        return self.array.shape[0]

    def __iter__(self) -> Iterator[Keypoint]:
        for x, y, c in self.array:
            yield Keypoint(float(x), float(y), float(c))

    def __getitem__(self, i) -> Keypoint:
        x, y, c = self.array[i]
        return Keypoint(float(x), float(y), float(c))

    def __eq__(self, other):
        if not isinstance(other, Pose):
            return NotImplemented
        return self.array.shape == other.array.shape and bool(np.array_equal(self.array, other.array))

    def __repr__(self):
        return f"Pose(n={len(self)})"

    @property
    def xy(self) -> np.ndarray:
        return self.array[:, :2]

    @property
    def confidences(self) -> np.ndarray:
        return self.array[:, 2]


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two boxes; 0 when the union has no area."""
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iw <= 0.0 or ih <= 0.0:
        inter = 0.0
    else:
        inter = iw * ih
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return min(1.0, max(0.0, inter / union))


def object_scale(b: Box) -> float:
    """Object scale ``sqrt(w * h)``."""
    return math.sqrt(b.width * b.height)


def boxes_to_array(boxes: Sequence[Box]) -> np.ndarray:
    if not boxes:
        return np.zeros((0, 4))
    return np.array([(b.x_min, b.y_min, b.x_max, b.y_max) for b in boxes], dtype=np.float64)


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IoU between ``(n, 4)`` and ``(m, 4)`` corner arrays."""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 4)
    iw = np.minimum(a[:, None, 2], b[None, :, 2]) - np.maximum(a[:, None, 0], b[None, :, 0])
    ih = np.minimum(a[:, None, 3], b[None, :, 3]) - np.maximum(a[:, None, 1], b[None, :, 1])
    inter = np.where((iw > 0) & (ih > 0), iw * ih, 0.0)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(union > 0, inter / np.where(union > 0, union, 1.0), 0.0)
    return np.clip(out, 0.0, 1.0)
