"""Scale-normalised image/feature pyramid sample planner.

For every pyramid factor ``omega`` the image is (conceptually) rescaled and
only objects whose rescaled scale ``omega * sqrt(w * h)`` falls inside
``[s_lower, s_upper]`` are used for training at that level. Up-scaled levels
are cut into crops of the original image size that together contain every
valid object; down-scaled levels become a single canvas padded back to the
original size. Valid objects are routed to the FPN level whose anchor side
is nearest in log2 space.

The planner only produces coordinates and index lists, never pixels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, PlanningError
from .geometry import Box, boxes_to_array, object_scale

# Containment slack in scaled pixels; absorbs rounding in chip placement.
_EPS = 1e-6


@dataclass(frozen=True)
class SifpConfig:
    omegas: tuple[float, ...] = (2.0, 1.5, 1.0, 0.75)
    s_lower: float = 16.0
    s_upper: float = 560.0
    fpn_areas: tuple[float, ...] = (32.0**2, 64.0**2, 128.0**2, 256.0**2, 512.0**2)
    # What to do with a valid object that cannot fit inside one crop:
    # "error" raises PlanningError, "ignore" records it under `oversized`.
    oversize: str = "error"

    def __post_init__(self):
        object.__setattr__(self, "omegas", tuple(float(w) for w in self.omegas))
        object.__setattr__(self, "fpn_areas", tuple(float(a) for a in self.fpn_areas))
        if not self.omegas or any(not w > 0 for w in self.omegas):
            raise ConfigError(f"pyramid factors must be positive, got {self.omegas}")
        if not 0 <= self.s_lower < self.s_upper:
            raise ConfigError(f"need 0 <= s_lower < s_upper, got [{self.s_lower}, {self.s_upper}]")
        a = self.fpn_areas
        if len(a) != 5 or any(not x > 0 for x in a) or any(a[i] >= a[i + 1] for i in range(4)):
            raise ConfigError(f"fpn_areas must be 5 strictly ascending positive areas, got {a}")
        if self.oversize not in ("error", "ignore"):
            raise ConfigError(f"oversize must be 'error' or 'ignore', got {self.oversize!r}")


@dataclass(frozen=True)
class Chip:
    """A crop (or padded canvas) in scaled-image coordinates."""

    x0: float
    y0: float
    width: float
    height: float
    objects: tuple[int, ...]
    ignored: tuple[int, ...]
    padded: bool = False

    @property
    def rect(self) -> Box:
        return Box(self.x0, self.y0, self.x0 + self.width, self.y0 + self.height)


@dataclass(frozen=True)
class PyramidLevel:
    omega: float
    scaled_width: float
    scaled_height: float
    included: tuple[int, ...]
    excluded: tuple[int, ...]
    fpn_levels: dict[int, int]
    chips: tuple[Chip, ...]
    oversized: tuple[int, ...] = ()


@dataclass(frozen=True)
class SifpPlan:
    image_width: float
    image_height: float
    levels: tuple[PyramidLevel, ...]
    scales: tuple[float, ...] = field(default=())

    def level(self, omega: float) -> PyramidLevel:
        for lv in self.levels:
            if lv.omega == omega:
                return lv
        raise KeyError(omega)


def rescaled_valid(b: Box, omega: float, cfg: SifpConfig = SifpConfig()) -> bool:
    s = omega * object_scale(b)
    return cfg.s_lower <= s <= cfg.s_upper


def assign_fpn_level(s: float, cfg: SifpConfig = SifpConfig()) -> int:
    """1-based FPN level whose anchor side is nearest to ``s`` in log2 space.

    Ties go to the lower level; ``s = 0`` maps to level 1.
    """
    if s < 0 or math.isnan(s):
        raise ValueError(f"scale must be non-negative, got {s}")
    if s == 0:
        return 1
    ls = math.log2(s)
    best, best_d = 1, math.inf
    for i, area in enumerate(cfg.fpn_areas, start=1):
        d = abs(ls - 0.5 * math.log2(area))
        if d < best_d:
            best, best_d = i, d
    return best


def _inside(chips_xy, w, h, boxes):
    """``(c, n)`` mask of boxes fully inside each ``(x0, y0)`` chip of size ``w x h``."""
    x0 = chips_xy[:, 0:1]
    y0 = chips_xy[:, 1:2]
    return (
        (boxes[None, :, 0] >= x0 - _EPS)
        & (boxes[None, :, 1] >= y0 - _EPS)
        & (boxes[None, :, 2] <= x0 + w + _EPS)
        & (boxes[None, :, 3] <= y0 + h + _EPS)
    )


def _overlaps(x0, y0, w, h, boxes):
    iw = np.minimum(boxes[:, 2], x0 + w) - np.maximum(boxes[:, 0], x0)
    ih = np.minimum(boxes[:, 3], y0 + h) - np.maximum(boxes[:, 1], y0)
    return (iw > 0) & (ih > 0)


def _cover(scaled, candidates, W, H, sw, sh):
    """Greedy chip cover of the ``candidates`` boxes at one up-scaled level."""
    chips = []
    uncovered = np.zeros(scaled.shape[0], dtype=bool)
    uncovered[candidates] = True
    members = np.zeros(scaled.shape[0], dtype=bool)
    members[candidates] = True
    while uncovered.any():
        seeds = np.nonzero(uncovered)[0]
        cx = 0.5 * (scaled[seeds, 0] + scaled[seeds, 2])
        cy = 0.5 * (scaled[seeds, 1] + scaled[seeds, 3])
        origins = np.stack(
            [np.clip(cx - W / 2, 0.0, sw - W), np.clip(cy - H / 2, 0.0, sh - H)], axis=1
        )
        inside = _inside(origins, W, H, scaled)
        gain = (inside & uncovered[None, :]).sum(1)
        best = int(np.argmax(gain))
        if gain[best] == 0:
            raise PlanningError(f"could not place a chip around object {int(seeds[best])}")
        cover = inside[best] & members
        chips.append((float(origins[best, 0]), float(origins[best, 1]), cover))
        uncovered &= ~cover
    return chips


def plan(image_w: float, image_h: float, objects: Sequence[Box], cfg: SifpConfig = SifpConfig()) -> SifpPlan:
    W, H = float(image_w), float(image_h)
    if not (W > 0 and H > 0):
        raise PlanningError(f"image size must be positive, got {W}x{H}")
    boxes = boxes_to_array(list(objects))
    n = boxes.shape[0]
    for i in range(n):
        x0, y0, x1, y1 = boxes[i]
        if x0 < -_EPS or y0 < -_EPS or x1 > W + _EPS or y1 > H + _EPS:
            raise PlanningError(f"object {i} {boxes[i].tolist()} lies outside the {W}x{H} image")
    scales = np.array([object_scale(b) for b in objects], dtype=np.float64)

    levels = []
    for omega in cfg.omegas:
        rescaled = omega * scales
        valid = (rescaled >= cfg.s_lower) & (rescaled <= cfg.s_upper)
        scaled = boxes * omega
        sw, sh = W * omega, H * omega
        fpn = {int(i): assign_fpn_level(float(rescaled[i]), cfg) for i in np.nonzero(valid)[0]}

        oversized = np.zeros(n, dtype=bool)
        if omega > 1:
            too_big = valid & (
                (scaled[:, 2] - scaled[:, 0] > W + _EPS) | (scaled[:, 3] - scaled[:, 1] > H + _EPS)
            )
            if too_big.any():
                i = int(np.nonzero(too_big)[0][0])
                if cfg.oversize == "error":
                    raise PlanningError(
                        f"object {i} ({scaled[i, 2] - scaled[i, 0]:.1f}x{scaled[i, 3] - scaled[i, 1]:.1f} "
                        f"at omega={omega}) does not fit in a {W:g}x{H:g} chip"
                    )
                oversized = too_big
            coverable = np.nonzero(valid & ~oversized)[0]
            raw = _cover(scaled, coverable, W, H, sw, sh)
        else:
            raw = [(0.0, 0.0, valid.copy())]

        chips = []
        for x0, y0, cover in raw:
            hit = _overlaps(x0, y0, W, H, scaled) & ~cover
            chips.append(
                Chip(
                    x0, y0, W, H,
                    tuple(int(i) for i in np.nonzero(cover)[0]),
                    tuple(int(i) for i in np.nonzero(hit)[0]),
                    padded=omega <= 1,
                )
            )
        level = PyramidLevel(
            omega,
            sw,
            sh,
            tuple(int(i) for i in np.nonzero(valid)[0]),
            tuple(int(i) for i in np.nonzero(~valid)[0]),
            fpn,
            tuple(chips),
            tuple(int(i) for i in np.nonzero(oversized)[0]),
        )
        _check_coverage(level)
        levels.append(level)
    return SifpPlan(W, H, tuple(levels), tuple(float(s) for s in scales))


def _check_coverage(level: PyramidLevel):
    seen = set()
    for c in level.chips:
        seen.update(c.objects)
    missing = set(level.included) - set(level.oversized) - seen
    if missing:
        raise PlanningError(f"valid objects {sorted(missing)} missing from every chip at omega={level.omega}")


def participating_scale_range(cfg: SifpConfig = SifpConfig()) -> tuple[float, float]:
    """Original-image scales that are valid at one pyramid level at least."""
    return cfg.s_lower / max(cfg.omegas), cfg.s_upper / min(cfg.omegas)


SCALE_BINS = (0.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0, math.inf)


def scale_histogram(plan_: SifpPlan, bins=SCALE_BINS) -> list[dict]:
    """Rows of object counts per scale bin: original scale and per-level rescaled scale."""
    scales = np.asarray(plan_.scales)
    rows = []
    for lo, hi in zip(bins[:-1], bins[1:]):
        row = {"bin": f"[{lo:g},{hi:g})", "original": int(((scales >= lo) & (scales < hi)).sum())}
        for lv in plan_.levels:
            s = lv.omega * scales
            inb = (s >= lo) & (s < hi)
            row[f"w{lv.omega:g}"] = int(inb.sum())
            mask = np.zeros(scales.size, dtype=bool)
            mask[list(lv.included)] = True
            row[f"w{lv.omega:g}_valid"] = int((inb & mask).sum())
        rows.append(row)
    return rows
