"""Geometry and detection data model shared by all pipeline stages.

All types are immutable after construction and all operations are pure,
so values can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from vehiclepipe.errors import ValidationError


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned rectangle in pixel coordinates.

    Attributes:
        x_min, y_min: Top-left corner. Fractional pixels allowed.
        x_max, y_max: Bottom-right corner; never smaller than the top-left.
    """

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        for name in ("x_min", "y_min", "x_max", "y_max"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValidationError(f"non-finite box coordinate {name}={v}")
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValidationError(
                f"inverted box corners ({self.x_min}, {self.y_min}, "
                f"{self.x_max}, {self.y_max})"
            )

    def area(self) -> float:
        """Box area in square pixels; 0 exactly when degenerate."""
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)


@dataclass(frozen=True)
class Detection:
    """A detected object: box, confidence in [0, 1], and class id.

    class_id 0 is the passenger class, 1 the other-vehicle class; a
    single-class detector always emits 0.
    """

    box: BoundingBox
    confidence: float
    class_id: int = 0

    def __post_init__(self) -> None:
        if not (0.0 <= self.confidence <= 1.0):
            raise ValidationError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class ValidRegion:
    """Operator-selected road rectangle; must have positive area."""

    region: BoundingBox

    def __post_init__(self) -> None:
        if self.region.area() <= 0.0:
            raise ValidationError("valid region must have positive area")


@dataclass(frozen=True)
class ImageGeometry:
    """Detection-resolution and source-resolution image sizes in pixels."""

    detect_width: float
    detect_height: float
    source_width: float
    source_height: float

    def __post_init__(self) -> None:
        for name in ("detect_width", "detect_height", "source_width", "source_height"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")


def intersection_area(a: BoundingBox, b: BoundingBox) -> float:
    """Overlap area of two boxes in square pixels; 0 when disjoint.

    Symmetric in its arguments and never exceeds either box's area.
    """
    w = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    h = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if w <= 0.0 or h <= 0.0:
        return 0.0
    return w * h


def center(b: BoundingBox) -> tuple[float, float]:
    """Center point of a box (midpoint of both axes)."""
    return ((b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0)


def contains(r: ValidRegion, p: tuple[float, float]) -> bool:
    """True iff the point lies inside the region; boundary counts as inside."""
    x, y = p
    box = r.region
    return box.x_min <= x <= box.x_max and box.y_min <= y <= box.y_max


def map_to_source(b: BoundingBox, g: ImageGeometry) -> BoundingBox:
    """Scale a detection-resolution box back to source-image coordinates.

    Each x coordinate is scaled by source_width/detect_width and each y by
    source_height/detect_height; the result is clamped to the source image
    bounds so downstream cropping can never index outside the image.
    """
    sx = g.source_width / g.detect_width
    sy = g.source_height / g.detect_height

    def clamp(v: float, hi: float) -> float:
        return min(max(v, 0.0), hi)

    return BoundingBox(
        x_min=clamp(b.x_min * sx, g.source_width),
        y_min=clamp(b.y_min * sy, g.source_height),
        x_max=clamp(b.x_max * sx, g.source_width),
        y_max=clamp(b.y_max * sy, g.source_height),
    )
