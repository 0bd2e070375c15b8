"""Linear SVM over deep feature vectors, trained by dual coordinate descent.

Solves the L2-regularized hinge-loss problem (L1-loss dual, one alpha per
sample, boxed by the per-sample cost). The bias is learned by augmenting
every sample with a constant 1 feature. Epoch order comes from a seeded
permutation, so identical inputs and seed give a bit-identical model.

Raw margins are not comparable across models, so a logistic calibration
(scale, offset) fitted on the training decision values maps them into
[0, 1] confidences for late fusion.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from vehiclepipe.calibration import fit_logistic, sigmoid
from vehiclepipe.errors import (
    MagicMismatchError,
    NonFiniteValueError,
    TrainingError,
    TruncatedFileError,
    ValidationError,
)
from vehiclepipe.features import LABELS, OTHER, PASSENGER, FeatureVector, LabeledSample

MODEL_MAGIC = b"VLM1"
MODEL_VERSION = 1

MAX_EPOCHS = 1000
DUAL_VIOLATION_TOL = 1e-4
DEFAULT_COST = 1.0


@dataclass(frozen=True)
class ClassifierModel:
    """Trained linear classifier: weights, bias, and confidence calibration."""

    weights: np.ndarray = field(repr=False)
    bias: float
    cal_scale: float
    cal_offset: float
    trained_on: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1:
            raise ValidationError("model weights must be a 1-D vector")
        if not (
            np.all(np.isfinite(w))
            and np.isfinite(self.bias)
            and np.isfinite(self.cal_scale)
            and np.isfinite(self.cal_offset)
        ):
            raise ValidationError("model parameters must be finite")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return int(self.weights.size)

    def decision_value(self, f: FeatureVector) -> float:
        if f.dim != self.dim:
            raise ValidationError(
                f"feature dim {f.dim} does not match model dim {self.dim}"
            )
        return float(np.dot(self.weights, f.values) + self.bias)


def _as_matrix(samples: list[LabeledSample]) -> tuple[np.ndarray, np.ndarray]:
    if not samples:
        raise TrainingError("no training samples")
    dim = samples[0].feature.dim
    for s in samples:
        if s.feature.dim != dim:
            raise TrainingError(
                f"mixed feature dims: {dim} vs {s.feature.dim} (image {s.image_id!r})"
            )
    x = np.stack([s.feature.values for s in samples]).astype(np.float64)
    if not np.all(np.isfinite(x)):
        raise TrainingError("non-finite feature value in training set")
    y = np.array([1.0 if s.label == PASSENGER else -1.0 for s in samples])
    if not (np.any(y > 0) and np.any(y < 0)):
        raise TrainingError("training set must contain both classes")
    return x, y


def train(
    samples: list[LabeledSample],
    cost: float = DEFAULT_COST,
    seed: int = 0,
    standardize: bool = False,
    class_weighted: bool = False,
) -> ClassifierModel:
    """Train the linear SVM; passenger is the positive class.

    standardize trains on per-dimension standardized features and folds
    the transform back into the returned weights, so the model always
    applies to raw features. class_weighted scales each sample's cost
    inversely to its class frequency.
    """
    if cost <= 0.0:
        raise TrainingError(f"cost must be positive, got {cost}")
    x, y = _as_matrix(samples)
    n, dim = x.shape

    mean = np.zeros(dim)
    scale = np.ones(dim)
    if standardize:
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        scale = np.where(std > 0.0, std, 1.0)
        x = (x - mean) / scale

    if class_weighted:
        n_pos = int(np.sum(y > 0))
        n_neg = n - n_pos
        per_sample_cost = np.where(y > 0, cost * n / (2.0 * n_pos), cost * n / (2.0 * n_neg))
    else:
        per_sample_cost = np.full(n, cost)

    # Bias via constant-feature augmentation: q_ii picks up the +1 and the
    # bias accumulates in beta alongside w.
    q_diag = np.einsum("ij,ij->i", x, x) + 1.0
    alpha = np.zeros(n)
    w = np.zeros(dim)
    beta = 0.0

    rng = np.random.default_rng(seed)
    epochs_run = 0
    prev_dual = 0.0  # dual objective at alpha = 0
    for epoch in range(MAX_EPOCHS):
        epochs_run = epoch + 1
        max_violation = 0.0
        for i in rng.permutation(n):
            margin = y[i] * (np.dot(w, x[i]) + beta)
            g = margin - 1.0
            c_i = per_sample_cost[i]
            if alpha[i] <= 0.0:
                pg = min(g, 0.0)
            elif alpha[i] >= c_i:
                pg = max(g, 0.0)
            else:
                pg = g
            if pg != 0.0:
                max_violation = max(max_violation, abs(pg))
                new_alpha = min(max(alpha[i] - g / q_diag[i], 0.0), c_i)
                delta = (new_alpha - alpha[i]) * y[i]
                w += delta * x[i]
                beta += delta
                alpha[i] = new_alpha

        # Dual coordinate descent decreases its own objective monotonically;
        # assert that each epoch, allowing for float round-off.
        dual = 0.5 * (np.dot(w, w) + beta * beta) - alpha.sum()
        assert dual <= prev_dual + 1e-9 * max(1.0, abs(prev_dual)), (
            f"dual objective increased: {prev_dual} -> {dual}"
        )
        prev_dual = dual
        if max_violation < DUAL_VIOLATION_TOL:
            break

    # Exact residual with the final weights (the in-sweep violations above
    # are measured against a moving w).
    margins = y * (x @ w + beta)
    g = margins - 1.0
    pg = np.where(alpha <= 0.0, np.minimum(g, 0.0), np.where(alpha >= per_sample_cost, np.maximum(g, 0.0), g))
    residual = float(np.max(np.abs(pg))) if n else 0.0

    decisions = x @ w + beta
    cal_scale, cal_offset = fit_logistic(decisions, y > 0)

    hinge = np.maximum(0.0, 1.0 - margins)
    objective = float(0.5 * (np.dot(w, w) + beta * beta) + np.dot(per_sample_cost, hinge))

    if standardize:
        # Fold x' = (x - mean)/scale back into raw-feature space.
        w = w / scale
        beta = beta - float(np.dot(w, mean))

    n_pos = int(np.sum(y > 0))
    meta = {
        "samples": n,
        "passenger": n_pos,
        "other": n - n_pos,
        "cost": cost,
        "seed": seed,
        "epochs": epochs_run,
        "dual_residual": residual,
        "objective": objective,
        "standardized": standardize,
        "class_weighted": class_weighted,
        "layer_tag": samples[0].feature.layer_tag,
    }
    return ClassifierModel(
        weights=w,
        bias=float(beta),
        cal_scale=cal_scale,
        cal_offset=cal_offset,
        trained_on=meta,
    )


def predict_confidence(
    m: ClassifierModel, f: FeatureVector, calibrated: bool = True
) -> tuple[float, float]:
    """Per-class confidences (passenger, other); always in [0, 1], sum 1.

    calibrated=False maps the raw margin through a unit sigmoid instead of
    the fitted calibration, for comparing against uncalibrated scores.
    """
    d = m.decision_value(f)
    z = m.cal_scale * d + m.cal_offset if calibrated else d
    conf_passenger = float(sigmoid(z))
    return conf_passenger, 1.0 - conf_passenger


def predict_label(m: ClassifierModel, f: FeatureVector, calibrated: bool = True) -> str:
    """Class with the larger confidence; an exact tie goes to passenger."""
    conf_passenger, conf_other = predict_confidence(m, f, calibrated=calibrated)
    return PASSENGER if conf_passenger >= conf_other else OTHER


def save_model(m: ClassifierModel, path: str | Path) -> None:
    """Write the versioned binary model record (little-endian float64)."""
    meta = json.dumps(m.trained_on, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<II", MODEL_VERSION, m.dim))
        fh.write(m.weights.astype("<f8").tobytes())
        fh.write(struct.pack("<ddd", m.bias, m.cal_scale, m.cal_offset))
        fh.write(struct.pack("<I", len(meta)))
        fh.write(meta)


def load_model(path: str | Path) -> ClassifierModel:
    """Read a model record; the round trip with save_model is bit-exact."""
    blob = Path(path).read_bytes()
    spath = str(path)

    def take(offset: int, count: int) -> bytes:
        if offset + count > len(blob):
            raise TruncatedFileError(
                offset=offset, needed=count, available=len(blob) - offset, path=spath
            )
        return blob[offset : offset + count]

    if take(0, 4) != MODEL_MAGIC:
        raise MagicMismatchError(expected=MODEL_MAGIC, found=blob[:4], path=spath)
    version, dim = struct.unpack("<II", take(4, 8))
    if version != MODEL_VERSION:
        raise MagicMismatchError(
            expected=MODEL_MAGIC + struct.pack("<I", MODEL_VERSION),
            found=MODEL_MAGIC + struct.pack("<I", version),
            path=spath,
        )
    pos = 12
    weights = np.frombuffer(take(pos, dim * 8), dtype="<f8").copy()
    pos += dim * 8
    bias, cal_scale, cal_offset = struct.unpack("<ddd", take(pos, 24))
    pos += 24
    (meta_len,) = struct.unpack("<I", take(pos, 4))
    pos += 4
    meta = json.loads(take(pos, meta_len).decode("utf-8"))
    if not np.all(np.isfinite(weights)):
        raise NonFiniteValueError(context="model weights", path=spath)
    return ClassifierModel(
        weights=weights,
        bias=bias,
        cal_scale=cal_scale,
        cal_offset=cal_offset,
        trained_on=meta,
    )
