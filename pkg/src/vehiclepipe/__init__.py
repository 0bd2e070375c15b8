"""Vehicle detection/classification pipeline toolkit.

Post-inference logic for a road-camera vehicle pipeline: decoding of
single-shot detector probability grids, removal of invalid detections,
linear-SVM classification over deep feature vectors, late fusion of
per-source confidences for dark images, and the evaluation metrics.
Network inference itself stays external; everything here operates on
interchange files (grids, feature vectors) and plain geometry.
"""

from vehiclepipe.geometry import (
    BoundingBox,
    Detection,
    ImageGeometry,
    ValidRegion,
    center,
    contains,
    intersection_area,
    map_to_source,
)

__all__ = [
    "BoundingBox",
    "Detection",
    "ImageGeometry",
    "ValidRegion",
    "center",
    "contains",
    "intersection_area",
    "map_to_source",
]

__version__ = "0.1.0"
