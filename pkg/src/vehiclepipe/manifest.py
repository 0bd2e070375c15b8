"""Dataset manifest: one JSON record per line describing each image.

A manifest row carries the image id, its split (train/test), its lighting
variant (normal/dark/transformed), optional ground truth (a class label
and/or bounding boxes in source-image coordinates), and references to the
grid/feature files holding that image's records. File references are
resolved relative to the manifest's directory and checked at load time:
every referenced file must exist and actually contain a record for the
image, so downstream commands never discover a dangling reference halfway
through a run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from vehiclepipe.errors import FormatError, ValidationError
from vehiclepipe.features import LABELS
from vehiclepipe.formats import read_feature_file, read_grid_file
from vehiclepipe.geometry import BoundingBox

SPLITS = ("train", "test")
VARIANTS = ("normal", "dark", "transformed")


@dataclass(frozen=True)
class ManifestRecord:
    image_id: str
    split: str
    variant: str
    label: str | None = None
    # None means "no detection ground truth"; an empty tuple means the
    # image is known to contain no vehicles.
    boxes: tuple[BoundingBox, ...] | None = None
    grid_file: str | None = None
    feature_files: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class DatasetManifest:
    records: tuple[ManifestRecord, ...]
    base_dir: Path

    def select(self, split: str | None = None, variant: str | None = None) -> list[ManifestRecord]:
        """Records filtered by split and/or variant, in manifest order."""
        return [
            r
            for r in self.records
            if (split is None or r.split == split) and (variant is None or r.variant == variant)
        ]

    def resolve(self, ref: str) -> Path:
        return self.base_dir / ref


def _parse_record(raw: dict, line_no: int) -> ManifestRecord:
    def fail(msg: str) -> FormatError:
        return FormatError(f"manifest line {line_no}: {msg}")

    try:
        image_id = raw["image_id"]
        split = raw["split"]
        variant = raw["variant"]
    except KeyError as e:
        raise fail(f"missing required field {e.args[0]!r}") from e
    if not isinstance(image_id, str) or not image_id:
        raise fail("image_id must be a non-empty string")
    if split not in SPLITS:
        raise fail(f"split must be one of {SPLITS}, got {split!r}")
    if variant not in VARIANTS:
        raise fail(f"variant must be one of {VARIANTS}, got {variant!r}")

    label = raw.get("label")
    if label is not None and label not in LABELS:
        raise fail(f"label must be one of {LABELS}, got {label!r}")

    boxes: list[BoundingBox] | None = None
    if raw.get("boxes") is not None:
        boxes = []
        for entry in raw["boxes"]:
            if not (isinstance(entry, list) and len(entry) == 4):
                raise fail(f"box entries must be [x_min, y_min, x_max, y_max], got {entry!r}")
            try:
                boxes.append(BoundingBox(*(float(v) for v in entry)))
            except (TypeError, ValueError, ValidationError) as e:
                raise fail(f"bad ground-truth box {entry!r}: {e}") from e

    feature_files = raw.get("features") or {}
    if not isinstance(feature_files, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in feature_files.items()
    ):
        raise fail("features must map layer tags to file paths")

    grid_file = raw.get("grids")
    if grid_file is not None and not isinstance(grid_file, str):
        raise fail("grids must be a file path")

    return ManifestRecord(
        image_id=image_id,
        split=split,
        variant=variant,
        label=label,
        boxes=None if boxes is None else tuple(boxes),
        grid_file=grid_file,
        feature_files=dict(feature_files),
    )


def load_manifest(path: str | Path) -> DatasetManifest:
    """Parse a manifest and validate its referential integrity."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise FormatError(f"cannot read manifest {path}: {e}") from e

    records: list[ManifestRecord] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as e:
            raise FormatError(f"manifest line {line_no}: invalid JSON: {e}") from e
        if not isinstance(raw, dict):
            raise FormatError(f"manifest line {line_no}: record must be a JSON object")
        records.append(_parse_record(raw, line_no))

    seen: set[tuple[str, str, str]] = set()
    for r in records:
        key = (r.split, r.variant, r.image_id)
        if key in seen:
            raise ValidationError(
                f"duplicate image_id {r.image_id!r} in split={r.split} variant={r.variant}"
            )
        seen.add(key)

    manifest = DatasetManifest(records=tuple(records), base_dir=path.parent)
    _check_references(manifest)
    return manifest


def _check_references(manifest: DatasetManifest) -> None:
    # Index each referenced file once; a file is typically shared by many rows.
    feature_ids: dict[str, set[str]] = {}
    grid_ids: dict[str, set[str]] = {}
    for r in manifest.records:
        refs = [(ref, "feature") for ref in r.feature_files.values()]
        if r.grid_file is not None:
            refs.append((r.grid_file, "grid"))
        for ref, kind in refs:
            full = manifest.resolve(ref)
            if not full.is_file():
                raise ValidationError(
                    f"image {r.image_id!r} references missing {kind} file {ref!r}"
                )
            index = feature_ids if kind == "feature" else grid_ids
            if ref not in index:
                if kind == "feature":
                    index[ref] = {rec.image_id for rec in read_feature_file(full)}
                else:
                    index[ref] = {image_id for image_id, _ in read_grid_file(full)[1]}
            if r.image_id not in index[ref]:
                raise ValidationError(
                    f"{kind} file {ref!r} has no record for image {r.image_id!r}"
                )
