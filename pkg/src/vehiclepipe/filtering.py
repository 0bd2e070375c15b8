"""Removal of invalid detections from a decoded candidate list.

A candidate survives only if its center lies inside the selected road
region and no surviving higher-ranked box overlaps it beyond a threshold.
The overlap measure is asymmetric containment, Int(A,B)/Area(A) or
Int(A,B)/Area(B), not IoU. The region clause is applied first so an
out-of-region box can never suppress a valid one.

Box rank is (confidence desc, area desc, input order); the area and
input-order components only matter when confidences tie exactly.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

from vehiclepipe.errors import ValidationError, ZeroAreaBoxError
from vehiclepipe.geometry import Detection, ValidRegion, center, contains, intersection_area

DEFAULT_OVERLAP_THRESHOLD = 0.5


@dataclass(frozen=True)
class FilterConfig:
    """Overlap threshold t in (0, 1] and the valid road region."""

    overlap_threshold: float
    region: ValidRegion

    def __post_init__(self) -> None:
        if not (0.0 < self.overlap_threshold <= 1.0):
            raise ValidationError(
                f"overlap threshold {self.overlap_threshold} outside (0, 1]"
            )


def _check_areas(cands: list[Detection]) -> None:
    for i, det in enumerate(cands):
        if det.box.area() <= 0.0:
            raise ZeroAreaBoxError(i)


def _rank_key(det: Detection, index: int) -> tuple[float, float, int]:
    return (-det.confidence, -det.box.area(), index)


def filter_detections(cands: list[Detection], cfg: FilterConfig) -> list[Detection]:
    """Apply the two-pass removal criterion; returns survivors, best first.

    Pass 1 drops every candidate whose center is outside the region.
    Pass 2 walks the remainder in rank order and keeps a box unless an
    already-kept box overlaps it beyond t in either containment ratio;
    kept boxes never rank below the boxes they suppress, so this encodes
    the strict-confidence clause of the criterion.

    Raises ZeroAreaBoxError naming the input index of any degenerate box;
    those indicate an upstream decoding bug rather than a poor detection.
    """
    _check_areas(cands)
    t = cfg.overlap_threshold

    in_region = [
        (idx, det) for idx, det in enumerate(cands) if contains(cfg.region, center(det.box))
    ]
    in_region.sort(key=lambda pair: _rank_key(pair[1], pair[0]))

    kept: list[Detection] = []
    for _, det in in_region:
        suppressed = False
        for other in kept:
            inter = intersection_area(det.box, other.box)
            if inter / det.box.area() > t or inter / other.box.area() > t:
                suppressed = True
                break
        if not suppressed:
            kept.append(det)
    return kept


def brute_force_filter(cands: list[Detection], cfg: FilterConfig) -> list[Detection]:
    """Reference transcription of the removal criterion, for testing.

    Evaluates all ordered pairs with no greedy keep-list: a box is removed
    exactly when some surviving box of higher rank overlaps it beyond t in
    either containment ratio, with survival defined by the same rule
    recursively (well-founded because rank is a strict total order). The
    region clause applies first, as in filter_detections. Quadratic and
    recursive; intended for test scenes, not production-size inputs.
    """
    _check_areas(cands)
    t = cfg.overlap_threshold

    confs = [d.confidence for d in cands]
    boxes = [d.box.as_tuple() for d in cands]
    areas = [(x1 - x0) * (y1 - y0) for x0, y0, x1, y1 in boxes]
    rx0, ry0, rx1, ry1 = cfg.region.region.as_tuple()

    def in_region(i: int) -> bool:
        x0, y0, x1, y1 = boxes[i]
        cx, cy = (x0 + x1) / 2.0, (y0 + y1) / 2.0
        return rx0 <= cx <= rx1 and ry0 <= cy <= ry1

    def over_threshold(i: int, j: int) -> bool:
        ax0, ay0, ax1, ay1 = boxes[i]
        bx0, by0, bx1, by1 = boxes[j]
        w = min(ax1, bx1) - max(ax0, bx0)
        h = min(ay1, by1) - max(ay0, by0)
        inter = w * h if (w > 0.0 and h > 0.0) else 0.0
        return inter / areas[i] > t or inter / areas[j] > t

    def outranks(j: int, i: int) -> bool:
        return (confs[j], areas[j], -j) > (confs[i], areas[i], -i)

    candidates = [i for i in range(len(cands)) if in_region(i)]

    @functools.cache
    def removed(i: int) -> bool:
        return any(
            outranks(j, i) and over_threshold(i, j) and not removed(j)
            for j in candidates
            if j != i
        )

    survivors = [i for i in candidates if not removed(i)]
    survivors.sort(key=lambda i: (-confs[i], -areas[i], i))
    return [cands[i] for i in survivors]
