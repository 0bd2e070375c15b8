"""Binary interchange files for feature vectors and probability grids.

Both formats are little-endian with 32-bit floats, so any producer
(the exporter, a training framework, a test generator) can emit them
bit-exactly. write then read then write round-trips byte-for-byte.

FeatureFile (.vfv):
    magic  b"VFV1"
    dim    u32      values per record
    count  u32      number of records
    record * count:
        id_len u32, id bytes (UTF-8), layer_tag u8, dim * f32

GridFile (.vgr):
    magic  b"VGR1"
    S, B, C, image_width, image_height   u32 each
    record until EOF:
        id_len u32, id bytes (UTF-8),
        S*S*B*5 f32  (cx, cy, w, h, objectness; row-major cell, then box),
        S*S*C  f32   (class probabilities, row-major)
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from vehiclepipe.errors import (
    FormatError,
    MagicMismatchError,
    NonFiniteValueError,
    TrailingDataError,
    TruncatedFileError,
)
from vehiclepipe.features import LAYER_TAGS, FeatureVector
from vehiclepipe.grid import BOX_CHANNELS, GridSpec, ProbabilityGrid

FEATURE_MAGIC = b"VFV1"
GRID_MAGIC = b"VGR1"

_TAG_TO_BYTE = {tag: i for i, tag in enumerate(LAYER_TAGS)}
_BYTE_TO_TAG = dict(enumerate(LAYER_TAGS))


class _Reader:
    """Sequential byte reader that reports truncation with its offset."""

    def __init__(self, blob: bytes, path: str | None):
        self.blob = blob
        self.pos = 0
        self.path = path

    def take(self, count: int) -> bytes:
        if self.pos + count > len(self.blob):
            raise TruncatedFileError(
                offset=self.pos,
                needed=count,
                available=len(self.blob) - self.pos,
                path=self.path,
            )
        out = self.blob[self.pos : self.pos + count]
        self.pos += count
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def text(self) -> str:
        length = self.u32()
        try:
            return self.take(length).decode("utf-8")
        except UnicodeDecodeError as e:
            raise FormatError(f"undecodable record id in {self.path}: {e}") from e

    def f32_array(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(count * 4), dtype="<f4", count=count)

    def at_eof(self) -> bool:
        return self.pos == len(self.blob)


def _write_text(fh, text: str) -> None:
    data = text.encode("utf-8")
    fh.write(struct.pack("<I", len(data)))
    fh.write(data)


def write_feature_file(path: str | Path, records: list[FeatureVector]) -> None:
    """Write feature records; all records must share one dimension."""
    dim = records[0].dim if records else 0
    for rec in records:
        if rec.dim != dim:
            raise FormatError(
                f"feature file requires uniform dim, got {dim} and {rec.dim}"
            )
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<II", dim, len(records)))
        for rec in records:
            _write_text(fh, rec.image_id)
            fh.write(struct.pack("<B", _TAG_TO_BYTE[rec.layer_tag]))
            fh.write(rec.values.astype("<f4").tobytes())


def read_feature_file(path: str | Path) -> list[FeatureVector]:
    """Read all feature records, validating structure and finiteness."""
    r = _Reader(Path(path).read_bytes(), str(path))
    magic = r.take(4)
    if magic != FEATURE_MAGIC:
        raise MagicMismatchError(expected=FEATURE_MAGIC, found=magic, path=r.path)
    dim = r.u32()
    count = r.u32()
    records: list[FeatureVector] = []
    for _ in range(count):
        image_id = r.text()
        (tag_byte,) = struct.unpack("<B", r.take(1))
        if tag_byte not in _BYTE_TO_TAG:
            raise FormatError(f"unknown layer tag byte {tag_byte} in {r.path}")
        values = r.f32_array(dim)
        if not np.all(np.isfinite(values)):
            raise NonFiniteValueError(
                context=f"feature record for image {image_id!r}", path=r.path
            )
        records.append(
            FeatureVector(
                values=values.astype(np.float64),
                layer_tag=_BYTE_TO_TAG[tag_byte],
                image_id=image_id,
            )
        )
    if not r.at_eof():
        raise TrailingDataError(offset=r.pos, path=r.path)
    return records


def write_grid_file(path: str | Path, spec: GridSpec, grids: list[tuple[str, ProbabilityGrid]]) -> None:
    """Write (image_id, grid) records; every grid must match the header spec."""
    if spec.image_width != int(spec.image_width) or spec.image_height != int(spec.image_height):
        raise FormatError("grid file header stores whole-pixel image dimensions")
    for image_id, grid in grids:
        if grid.spec != spec:
            raise FormatError(
                f"grid for image {image_id!r} has spec {grid.spec}, header says {spec}"
            )
    with open(path, "wb") as fh:
        fh.write(GRID_MAGIC)
        fh.write(
            struct.pack(
                "<5I",
                spec.cells_per_side,
                spec.boxes_per_cell,
                spec.class_count,
                int(spec.image_width),
                int(spec.image_height),
            )
        )
        for image_id, grid in grids:
            _write_text(fh, image_id)
            fh.write(grid.boxes.astype("<f4").tobytes())
            fh.write(grid.class_probs.astype("<f4").tobytes())


def read_grid_file(path: str | Path) -> tuple[GridSpec, list[tuple[str, ProbabilityGrid]]]:
    """Read the header and every (image_id, grid) record until EOF."""
    r = _Reader(Path(path).read_bytes(), str(path))
    magic = r.take(4)
    if magic != GRID_MAGIC:
        raise MagicMismatchError(expected=GRID_MAGIC, found=magic, path=r.path)
    s, b, c, width, height = struct.unpack("<5I", r.take(20))
    spec = GridSpec(
        cells_per_side=s,
        boxes_per_cell=b,
        class_count=c,
        image_width=float(width),
        image_height=float(height),
    )
    n_box = s * s * b * BOX_CHANNELS
    n_prob = s * s * c
    grids: list[tuple[str, ProbabilityGrid]] = []
    while not r.at_eof():
        image_id = r.text()
        boxes = r.f32_array(n_box)
        probs = r.f32_array(n_prob)
        if not (np.all(np.isfinite(boxes)) and np.all(np.isfinite(probs))):
            raise NonFiniteValueError(
                context=f"grid record for image {image_id!r}", path=r.path
            )
        grid = ProbabilityGrid(
            spec=spec,
            boxes=boxes.astype(np.float64).reshape(s, s, b, BOX_CHANNELS),
            class_probs=probs.astype(np.float64).reshape(s, s, c),
        )
        grids.append((image_id, grid))
    return spec, grids
