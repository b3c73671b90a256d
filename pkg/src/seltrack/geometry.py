"""Axis-aligned bounding-box math: IoU, aspect-ratio similarity, blended alpha."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class BBox:
    """Top-left + size box in pixels. Width and height must be positive and finite."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("x", "y", "w", "h"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"non-finite bbox field {name}={v!r}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"non-positive bbox size w={self.w}, h={self.h}")

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def cx(self) -> float:
        return self.x + self.w / 2.0

    @property
    def cy(self) -> float:
        return self.y + self.h / 2.0

    @property
    def aspect(self) -> float:
        return self.w / self.h

    def as_xyxy(self) -> tuple[float, float, float, float]:
        return self.x, self.y, self.x + self.w, self.y + self.h


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union in [0, 1]. Touching edges count as disjoint."""
    ax1, ay1, ax2, ay2 = a.as_xyxy()
    bx1, by1, bx2, by2 = b.as_xyxy()
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    # areas from the same corner coordinates so iou(a, a) is exactly 1
    area_a = (ax2 - ax1) * (ay2 - ay1)
    area_b = (bx2 - bx1) * (by2 - by1)
    return inter / (area_a + area_b - inter)


def ars(a: BBox, b: BBox) -> float:
    """Aspect-ratio similarity: 1 - (4/pi^2) * (atan(w_a/h_a) - atan(w_b/h_b))^2.

    Equals 1 iff the aspect ratios match; invariant under uniform scaling of
    either box. Range (0, 1] since atan differences stay below pi/2.
    """
    d = math.atan(a.w / a.h) - math.atan(b.w / b.h)
    return 1.0 - (4.0 / math.pi**2) * d * d


def blended_alpha(iou_value: float, v: float) -> float:
    """IoU-adaptive blending of the aspect similarity: V / ((1 - IoU) + V).

    The 0/0 corner (iou=1, v=0) is defined as 0, the conservative outcome
    for a threshold test. Monotone non-decreasing in both arguments.
    """
    if not 0.0 <= iou_value <= 1.0:
        raise ValueError(f"iou out of range: {iou_value!r}")
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"v out of range: {v!r}")
    denom = (1.0 - iou_value) + v
    if denom == 0.0:
        return 0.0
    return v / denom
