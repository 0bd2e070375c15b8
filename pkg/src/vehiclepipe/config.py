"""Run configuration with explicit precedence: CLI flag > config file > default.

The defaults make every constant the underlying method leaves unstated
(score threshold, overlap threshold t, SVM cost, IoU matching threshold)
visible and tunable; `vehiclepipe show-config` prints the effective
values. The config file is a single JSON object; its path comes from
--config or the VEHICLEPIPE_CONFIG environment variable.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path

from vehiclepipe.errors import FormatError, ValidationError

CONFIG_ENV_VAR = "VEHICLEPIPE_CONFIG"


@dataclass(frozen=True)
class RunConfig:
    score_threshold: float = 0.2
    overlap_threshold: float = 0.5
    iou_threshold: float = 0.5
    svm_cost: float = 1.0
    seed: int = 0
    region: tuple[float, float, float, float] | None = None
    source_width: float | None = None
    source_height: float | None = None
    standardize: bool = False
    class_weighted: bool = False
    calibrated: bool = True

    def __post_init__(self) -> None:
        if not (0.0 <= self.score_threshold <= 1.0):
            raise ValidationError(f"score_threshold {self.score_threshold} outside [0, 1]")
        if not (0.0 < self.overlap_threshold <= 1.0):
            raise ValidationError(f"overlap_threshold {self.overlap_threshold} outside (0, 1]")
        if not (0.0 < self.iou_threshold <= 1.0):
            raise ValidationError(f"iou_threshold {self.iou_threshold} outside (0, 1]")
        if self.svm_cost <= 0.0:
            raise ValidationError(f"svm_cost {self.svm_cost} must be positive")
        if self.region is not None:
            x0, y0, x1, y1 = self.region
            if not (x0 < x1 and y0 < y1):
                raise ValidationError(f"region {self.region} must have positive area")
        for name in ("source_width", "source_height"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValidationError(f"{name} must be positive")

    def as_dict(self) -> dict:
        out = dataclasses.asdict(self)
        if out["region"] is not None:
            out["region"] = list(out["region"])
        return out


_FIELD_NAMES = {f.name for f in dataclasses.fields(RunConfig)}


def load_config(path: str | Path | None, overrides: dict | None = None) -> RunConfig:
    """Merge defaults, an optional config file, and explicit overrides.

    Override values of None mean "not given on the command line" and are
    ignored, which is what gives CLI flags the highest precedence.
    """
    values: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as e:
            raise FormatError(f"cannot read config file {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise FormatError(f"config file {path} is not valid JSON: {e}") from e
        if not isinstance(raw, dict):
            raise FormatError(f"config file {path} must hold a JSON object")
        unknown = set(raw) - _FIELD_NAMES
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        values.update(raw)
    for key, value in (overrides or {}).items():
        if value is not None:
            if key not in _FIELD_NAMES:
                raise ValidationError(f"unknown config key {key!r}")
            values[key] = value
    if "region" in values and values["region"] is not None:
        region = values["region"]
        if not (isinstance(region, (list, tuple)) and len(region) == 4):
            raise ValidationError(f"region must be [x_min, y_min, x_max, y_max], got {region!r}")
        values["region"] = tuple(float(v) for v in region)
    return RunConfig(**values)


def config_path_from_env() -> str | None:
    return os.environ.get(CONFIG_ENV_VAR) or None
