"""Logistic calibration of raw classifier margins into probabilities.

Fits p(d) = sigmoid(a*d + b) to decision values by Newton's method on the
cross-entropy against softened targets (the usual (N+1)/(N+2) smoothing,
which keeps the objective bounded on separable data). Deterministic: no
randomness, fixed iteration cap.
"""

from __future__ import annotations

import numpy as np

MAX_NEWTON_STEPS = 100
GRADIENT_TOL = 1e-8


def sigmoid(z: np.ndarray | float) -> np.ndarray | float:
    # Clipping keeps exp() finite; 500 is far beyond float64 resolution of
    # the sigmoid anyway.
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


def fit_logistic(decisions: np.ndarray, positive: np.ndarray) -> tuple[float, float]:
    """Fit (scale a, offset b) so sigmoid(a*d + b) tracks P(positive | d).

    decisions are raw margins; positive is a boolean array marking the
    positive class. Uses damped Newton steps (at most MAX_NEWTON_STEPS)
    with backtracking so the objective never increases.
    """
    d = np.asarray(decisions, dtype=np.float64)
    pos = np.asarray(positive, dtype=bool)
    n_pos = int(pos.sum())
    n_neg = int(d.size - n_pos)

    hi = (n_pos + 1.0) / (n_pos + 2.0)
    lo = 1.0 / (n_neg + 2.0)
    target = np.where(pos, hi, lo)

    def objective(a: float, b: float) -> float:
        p = sigmoid(a * d + b)
        eps = 1e-300
        return float(-np.sum(target * np.log(p + eps) + (1 - target) * np.log(1 - p + eps)))

    a = 0.0
    b = float(np.log((n_pos + 1.0) / (n_neg + 1.0)))
    obj = objective(a, b)

    for _ in range(MAX_NEWTON_STEPS):
        p = sigmoid(a * d + b)
        residual = p - target
        grad_a = float(np.dot(residual, d))
        grad_b = float(residual.sum())
        if max(abs(grad_a), abs(grad_b)) < GRADIENT_TOL:
            break
        w = p * (1.0 - p)
        h_aa = float(np.dot(w, d * d)) + 1e-12
        h_ab = float(np.dot(w, d))
        h_bb = float(w.sum()) + 1e-12
        det = h_aa * h_bb - h_ab * h_ab
        if det <= 0.0:
            break
        step_a = (h_bb * grad_a - h_ab * grad_b) / det
        step_b = (h_aa * grad_b - h_ab * grad_a) / det

        # Backtracking line search on the full Newton step.
        scale = 1.0
        for _ in range(50):
            new_a, new_b = a - scale * step_a, b - scale * step_b
            new_obj = objective(new_a, new_b)
            if new_obj <= obj + 1e-12:
                a, b, obj = new_a, new_b, new_obj
                break
            scale *= 0.5
        else:
            break

    return float(a), float(b)
