"""Late fusion of per-source classification confidences.

A dark image is classified twice, once as captured and once after the
lighting transformation; fusion picks the class of the single most
confident (class, source) pair.
"""

from __future__ import annotations

from dataclasses import dataclass

from vehiclepipe.errors import ValidationError
from vehiclepipe.features import OTHER, PASSENGER

SOURCE_ORIGINAL = "original"
SOURCE_TRANSFORMED = "transformed"
SOURCES = (SOURCE_ORIGINAL, SOURCE_TRANSFORMED)

SUM_TOL = 1e-9


@dataclass(frozen=True)
class ConfidenceTable:
    """2x2 class-by-source confidence matrix; each source column sums to 1."""

    passenger_original: float
    other_original: float
    passenger_transformed: float
    other_transformed: float

    def __post_init__(self) -> None:
        for name in (
            "passenger_original",
            "other_original",
            "passenger_transformed",
            "other_transformed",
        ):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValidationError(f"confidence {name}={v} outside [0, 1]")
        for source, total in (
            (SOURCE_ORIGINAL, self.passenger_original + self.other_original),
            (SOURCE_TRANSFORMED, self.passenger_transformed + self.other_transformed),
        ):
            if abs(total - 1.0) > SUM_TOL:
                raise ValidationError(
                    f"{source} confidences sum to {total}, expected 1"
                )

    def get(self, label: str, source: str) -> float:
        return getattr(self, f"{label}_{source}")


def fuse(t: ConfidenceTable) -> tuple[str, str]:
    """Class and source of the maximal table entry.

    Ties prefer the original source over the transformed one, then the
    passenger class over other. Keeping the first strict maximum while
    scanning in that precedence order implements both tie-breaks.
    """
    best_label, best_source = PASSENGER, SOURCE_ORIGINAL
    best = t.get(best_label, best_source)
    for source in SOURCES:
        for label in (PASSENGER, OTHER):
            value = t.get(label, source)
            if value > best:
                best, best_label, best_source = value, label, source
    return best_label, best_source
