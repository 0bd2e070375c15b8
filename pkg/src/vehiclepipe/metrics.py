"""Evaluation metrics: class-balanced accuracy and detection precision/recall.

Balanced accuracy averages the per-class accuracies so the passenger/other
imbalance cannot hide a weak class. Detection counts come from greedy
IoU matching of predictions to ground truth (IoU, not the containment
ratios used by the detection filter).
"""

from __future__ import annotations

from dataclasses import dataclass

from vehiclepipe.errors import ValidationError, ZeroAreaBoxError
from vehiclepipe.features import LABELS
from vehiclepipe.geometry import BoundingBox, Detection, intersection_area

DEFAULT_IOU_THRESHOLD = 0.5


@dataclass(frozen=True)
class ConfusionMatrix:
    """Correct/total counts per class for the two-class problem."""

    correct_pass: int
    size_pass: int
    correct_other: int
    size_other: int

    def __post_init__(self) -> None:
        for name in ("correct_pass", "size_pass", "correct_other", "size_other"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be non-negative")
        if self.correct_pass > self.size_pass or self.correct_other > self.size_other:
            raise ValidationError("correct count exceeds class size")

    @classmethod
    def from_labels(cls, predicted: list[str], actual: list[str]) -> ConfusionMatrix:
        if len(predicted) != len(actual):
            raise ValidationError(
                f"{len(predicted)} predictions vs {len(actual)} ground-truth labels"
            )
        for lab in (*predicted, *actual):
            if lab not in LABELS:
                raise ValidationError(f"unknown label {lab!r}")
        passenger, other = LABELS
        return cls(
            correct_pass=sum(1 for p, a in zip(predicted, actual) if a == passenger and p == a),
            size_pass=sum(1 for a in actual if a == passenger),
            correct_other=sum(1 for p, a in zip(predicted, actual) if a == other and p == a),
            size_other=sum(1 for a in actual if a == other),
        )


@dataclass(frozen=True)
class DetectionCounts:
    """Outcome of matching predicted boxes against ground truth."""

    true_positive: int
    false_positive: int
    false_negative: int

    def __post_init__(self) -> None:
        for name in ("true_positive", "false_positive", "false_negative"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be non-negative")


def balanced_accuracy(cm: ConfusionMatrix) -> float:
    """Mean of the per-class accuracies, in [0, 1]."""
    if cm.size_pass == 0 or cm.size_other == 0:
        raise ValidationError("balanced accuracy undefined for an empty class")
    return (cm.correct_pass / cm.size_pass + cm.correct_other / cm.size_other) / 2.0


def detection_pr(c: DetectionCounts) -> tuple[float, float]:
    """(precision, recall) from detection counts; errors name the metric
    whose denominator is zero."""
    if c.true_positive + c.false_positive == 0:
        raise ValidationError("precision undefined: no positive predictions")
    if c.true_positive + c.false_negative == 0:
        raise ValidationError("recall undefined: no ground-truth positives")
    precision = c.true_positive / (c.true_positive + c.false_positive)
    recall = c.true_positive / (c.true_positive + c.false_negative)
    return precision, recall


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union; 0 when disjoint."""
    inter = intersection_area(a, b)
    union = a.area() + b.area() - inter
    return inter / union if union > 0.0 else 0.0


def match_detections(
    preds: list[Detection],
    truth: list[BoundingBox],
    iou_threshold: float = DEFAULT_IOU_THRESHOLD,
) -> DetectionCounts:
    """Greedy one-to-one matching of predictions to ground-truth boxes.

    Predictions are visited in descending confidence (stable, so equal
    confidences keep input order); each one claims the unmatched truth box
    of highest IoU provided that IoU reaches iou_threshold. Claimed pairs
    are true positives, leftover predictions false positives, leftover
    truths false negatives, so tp + fn always equals len(truth).
    """
    if not (0.0 < iou_threshold <= 1.0):
        raise ValidationError(f"IoU threshold {iou_threshold} outside (0, 1]")
    for i, det in enumerate(preds):
        if det.box.area() <= 0.0:
            raise ZeroAreaBoxError(i, context="prediction")
    for i, box in enumerate(truth):
        if box.area() <= 0.0:
            raise ZeroAreaBoxError(i, context="ground-truth")

    order = sorted(range(len(preds)), key=lambda i: (-preds[i].confidence, i))
    matched = [False] * len(truth)
    tp = 0
    for i in order:
        best_j = -1
        best_iou = 0.0
        for j, gt in enumerate(truth):
            if matched[j]:
                continue
            value = iou(preds[i].box, gt)
            if value > best_iou:
                best_iou = value
                best_j = j
        if best_j >= 0 and best_iou >= iou_threshold:
            matched[best_j] = True
            tp += 1
    return DetectionCounts(
        true_positive=tp,
        false_positive=len(preds) - tp,
        false_negative=len(truth) - tp,
    )
