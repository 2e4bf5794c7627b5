"""Logistic regression with mean cross-entropy and an L2 penalty on the weights."""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from ..errors import DimensionMismatch
from .params import LogRegParams

LOGIT_CLIP = 40.0
_P_MAX = np.nextafter(1.0, 0.0)


def probability(logits) -> np.ndarray:
    """Sigmoid of clipped logits, kept strictly inside (0, 1)."""
    z = np.clip(logits, -LOGIT_CLIP, LOGIT_CLIP)
    return np.minimum(expit(z), _P_MAX)


def init_logreg(n_features: int, l2: float = 0.0, uses_waveform: bool = False) -> LogRegParams:
    return LogRegParams(np.zeros(n_features), np.array(0.0), float(l2), uses_waveform)


def _logits(p: LogRegParams, x: np.ndarray) -> np.ndarray:
    if x.shape[-1] != p.w.shape[0]:
        raise DimensionMismatch(f"{x.shape[-1]} inputs for {p.w.shape[0]} weights")
    return x @ p.w + p.b


def logreg_forward(p: LogRegParams, x) -> np.ndarray | float:
    """``sigmoid(w . x + b)`` for one row or a batch of rows."""
    x = np.asarray(x, dtype=np.float64)
    out = probability(_logits(p, x))
    return float(out) if x.ndim == 1 else out


def bce_from_logits(z: np.ndarray, y: np.ndarray) -> float:
    """Mean binary cross-entropy, evaluated stably on raw logits."""
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def logreg_loss_grad(p: LogRegParams, x, y):
    """``(loss, grad)`` for ``mean BCE + (l2 / 2) * ||w||^2``.

    ``grad`` is a ``LogRegParams`` holding the partial derivatives.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or len(x) == 0 or len(x) != len(y):
        raise DimensionMismatch("need a non-empty 2-d batch with one label per row")
    z = _logits(p, x)
    loss = bce_from_logits(z, y) + 0.5 * p.l2 * float(p.w @ p.w)
    dz = (expit(z) - y) / len(y)
    grad = LogRegParams(x.T @ dz + p.l2 * p.w, np.array(dz.sum()), p.l2, p.uses_waveform)
    return loss, grad
