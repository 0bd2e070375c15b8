"""Deep feature vectors and labeled samples for the vehicle classifier.

Features are activations extracted from the fc6/fc7 layers of the
classification network (4096 values each) or their concatenation (8192);
other dimensions are accepted so tests can run on small vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from vehiclepipe.errors import ValidationError

PASSENGER = "passenger"
OTHER = "other"
LABELS = (PASSENGER, OTHER)

LAYER_TAGS = ("fc6", "fc7", "fc6fc7", "other")


@dataclass(frozen=True)
class FeatureVector:
    """One image's deep feature vector with its source-layer tag."""

    values: np.ndarray = field(repr=False)
    layer_tag: str
    image_id: str = ""

    def __post_init__(self) -> None:
        if self.layer_tag not in LAYER_TAGS:
            raise ValidationError(f"unknown layer tag {self.layer_tag!r}")
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValidationError(f"feature values must be 1-D, got shape {values.shape}")
        if values.size and not np.all(np.isfinite(values)):
            raise ValidationError(f"non-finite feature value for image {self.image_id!r}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class LabeledSample:
    """A feature vector with its ground-truth vehicle class."""

    feature: FeatureVector
    label: str
    image_id: str

    def __post_init__(self) -> None:
        if self.label not in LABELS:
            raise ValidationError(f"label must be one of {LABELS}, got {self.label!r}")


def concat_features(a: FeatureVector, b: FeatureVector) -> FeatureVector:
    """Concatenate an fc6 vector with the matching fc7 vector of one image."""
    if a.layer_tag != "fc6" or b.layer_tag != "fc7":
        raise ValidationError(
            f"concat expects (fc6, fc7) inputs, got ({a.layer_tag}, {b.layer_tag})"
        )
    if a.image_id != b.image_id:
        raise ValidationError(
            f"concat inputs belong to different images: {a.image_id!r} vs {b.image_id!r}"
        )
    return FeatureVector(
        values=np.concatenate([a.values, b.values]),
        layer_tag="fc6fc7",
        image_id=a.image_id,
    )
