"""Line-delimited JSON records the CLI commands exchange.

Every writer emits one sorted-key JSON object per line with a trailing
newline, so identical inputs always serialize to identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

from vehiclepipe.errors import FormatError, ValidationError
from vehiclepipe.features import LABELS
from vehiclepipe.fusion import SOURCES
from vehiclepipe.geometry import BoundingBox, Detection

SUM_TOL = 1e-9


def _dump_lines(path: str | Path, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True))
            fh.write("\n")


def _load_lines(path: str | Path, kind: str) -> list[dict]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise FormatError(f"cannot read {kind} file {path}: {e}") from e
    rows = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as e:
            raise FormatError(f"{kind} file {path} line {line_no}: invalid JSON: {e}") from e
        if not isinstance(row, dict):
            raise FormatError(f"{kind} file {path} line {line_no}: record must be an object")
        row["_line"] = line_no
        rows.append(row)
    return rows


def write_detections(path: str | Path, rows: list[tuple[str, list[Detection]]]) -> None:
    _dump_lines(
        path,
        [
            {
                "image_id": image_id,
                "detections": [
                    {
                        "box": list(det.box.as_tuple()),
                        "confidence": det.confidence,
                        "class_id": det.class_id,
                    }
                    for det in dets
                ],
            }
            for image_id, dets in rows
        ],
    )


def read_detections(path: str | Path) -> list[tuple[str, list[Detection]]]:
    out = []
    for row in _load_lines(path, "detections"):
        line = row.pop("_line")
        try:
            dets = [
                Detection(
                    box=BoundingBox(*(float(v) for v in d["box"])),
                    confidence=float(d["confidence"]),
                    class_id=int(d["class_id"]),
                )
                for d in row["detections"]
            ]
            out.append((row["image_id"], dets))
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"detections file {path} line {line}: {e}") from e
        except ValidationError as e:
            raise ValidationError(f"detections file {path} line {line}: {e}") from e
    return out


def write_confidences(path: str | Path, rows: list[tuple[str, float, float]]) -> None:
    _dump_lines(
        path,
        [
            {"image_id": image_id, "conf_passenger": cp, "conf_other": co}
            for image_id, cp, co in rows
        ],
    )


def read_confidences(path: str | Path) -> list[tuple[str, float, float]]:
    out = []
    for row in _load_lines(path, "confidences"):
        line = row.pop("_line")
        try:
            image_id = row["image_id"]
            cp = float(row["conf_passenger"])
            co = float(row["conf_other"])
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"confidences file {path} line {line}: {e}") from e
        if not (0.0 <= cp <= 1.0 and 0.0 <= co <= 1.0):
            raise ValidationError(
                f"confidences file {path} line {line}: values outside [0, 1]"
            )
        if abs(cp + co - 1.0) > SUM_TOL:
            raise ValidationError(
                f"confidences file {path} line {line}: confidences sum to {cp + co}"
            )
        out.append((image_id, cp, co))
    return out


def write_labels(path: str | Path, rows: list[tuple[str, str, str]]) -> None:
    _dump_lines(
        path,
        [
            {"image_id": image_id, "label": label, "winning_source": source}
            for image_id, label, source in rows
        ],
    )


def read_labels(path: str | Path) -> list[tuple[str, str, str]]:
    out = []
    for row in _load_lines(path, "labels"):
        line = row.pop("_line")
        try:
            image_id = row["image_id"]
            label = row["label"]
            source = row.get("winning_source", SOURCES[0])
        except KeyError as e:
            raise FormatError(f"labels file {path} line {line}: missing {e.args[0]!r}") from e
        if label not in LABELS:
            raise ValidationError(f"labels file {path} line {line}: unknown label {label!r}")
        if source not in SOURCES:
            raise ValidationError(f"labels file {path} line {line}: unknown source {source!r}")
        out.append((image_id, label, source))
    return out
