"""Decode a single-shot detector probability grid into candidate detections.

The detector divides the image into S x S cells; each cell predicts B raw
boxes (center relative to the cell, size relative to the image, plus an
objectness score) and C class probabilities. This pipeline runs the
detector with S=11 and a single vehicle class, but the decoder accepts
any grid shape carried by the interchange file.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from vehiclepipe.errors import MalformedGridError, ValidationError
from vehiclepipe.geometry import BoundingBox, Detection

DEFAULT_SCORE_THRESHOLD = 0.2

# Per-box raw channels: cx_rel, cy_rel (cell-relative), w_rel, h_rel
# (image-relative), objectness. All stored values live in [0, 1].
BOX_CHANNELS = 5


@dataclass(frozen=True)
class GridSpec:
    """Shape of a probability grid and the image it was computed on."""

    cells_per_side: int
    boxes_per_cell: int
    class_count: int
    image_width: float
    image_height: float

    def __post_init__(self) -> None:
        if self.cells_per_side < 1 or self.boxes_per_cell < 1 or self.class_count < 1:
            raise MalformedGridError(
                f"grid shape must be at least 1x1x1, got S={self.cells_per_side} "
                f"B={self.boxes_per_cell} C={self.class_count}"
            )
        if self.image_width <= 0 or self.image_height <= 0:
            raise MalformedGridError("grid image dimensions must be positive")


@dataclass(frozen=True)
class ProbabilityGrid:
    """Raw per-cell box and class predictions for one image.

    boxes has shape (S, S, B, 5) indexed by (row, col, box, channel) and
    class_probs has shape (S, S, C). Arrays are frozen read-only at
    construction; a grid is safe to decode from multiple threads.
    """

    spec: GridSpec
    boxes: np.ndarray = field(repr=False)
    class_probs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        s = self.spec
        boxes = np.asarray(self.boxes, dtype=np.float64)
        probs = np.asarray(self.class_probs, dtype=np.float64)
        want_boxes = (s.cells_per_side, s.cells_per_side, s.boxes_per_cell, BOX_CHANNELS)
        want_probs = (s.cells_per_side, s.cells_per_side, s.class_count)
        if boxes.shape != want_boxes:
            raise MalformedGridError(
                f"box array shape {boxes.shape} does not match spec {want_boxes}"
            )
        if probs.shape != want_probs:
            raise MalformedGridError(
                f"class probability shape {probs.shape} does not match spec {want_probs}"
            )
        if not np.all(np.isfinite(boxes)) or not np.all(np.isfinite(probs)):
            raise MalformedGridError("grid contains non-finite values")
        if boxes.min() < 0.0 or boxes.max() > 1.0 or (
            probs.size and (probs.min() < 0.0 or probs.max() > 1.0)
        ):
            raise MalformedGridError("grid values must lie in [0, 1]")
        boxes.flags.writeable = False
        probs.flags.writeable = False
        object.__setattr__(self, "boxes", boxes)
        object.__setattr__(self, "class_probs", probs)


def decode(grid: ProbabilityGrid, score_threshold: float = DEFAULT_SCORE_THRESHOLD) -> list[Detection]:
    """Turn a probability grid into a confidence-sorted detection list.

    A box in cell (row, col) scores objectness times the cell's best class
    probability and is emitted only when the score strictly exceeds
    score_threshold. Box centers are cell-relative, sizes image-relative;
    emitted boxes are corner-form and clamped to the image bounds. Output
    is ordered by descending confidence, ties by (row, col, box index).
    """
    if not (0.0 <= score_threshold <= 1.0):
        raise ValidationError(f"score threshold {score_threshold} outside [0, 1]")
    spec = grid.spec
    s = spec.cells_per_side
    width, height = spec.image_width, spec.image_height

    best_class = grid.class_probs.argmax(axis=2)
    best_prob = grid.class_probs.max(axis=2)

    emitted: list[tuple[float, tuple[int, int, int], Detection]] = []
    for row in range(s):
        for col in range(s):
            for k in range(spec.boxes_per_cell):
                cx_rel, cy_rel, w_rel, h_rel, objectness = grid.boxes[row, col, k]
                score = objectness * best_prob[row, col]
                if score <= score_threshold:
                    continue
                cx = (col + cx_rel) / s * width
                cy = (row + cy_rel) / s * height
                w = w_rel * width
                h = h_rel * height
                box = BoundingBox(
                    x_min=min(max(cx - w / 2.0, 0.0), width),
                    y_min=min(max(cy - h / 2.0, 0.0), height),
                    x_max=min(max(cx + w / 2.0, 0.0), width),
                    y_max=min(max(cy + h / 2.0, 0.0), height),
                )
                det = Detection(
                    box=box,
                    confidence=float(score),
                    class_id=int(best_class[row, col]),
                )
                emitted.append((-score, (row, col, k), det))

    emitted.sort(key=lambda item: (item[0], item[1]))
    return [det for _, _, det in emitted]
