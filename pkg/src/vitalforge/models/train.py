"""Mini-batch gradient descent with norm clipping and early stopping on validation AUC-ROC."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, fields

import numpy as np

from ..errors import DimensionMismatch, NoMinorityInTraining, OneClassOnly, ValidationError
from ..metrics import auc_roc
from .fusion import fusion_forward, fusion_loss_grad, init_sequence_model
from .logreg import init_logreg, logreg_forward, logreg_loss_grad
from .params import FusionParams, LogRegParams, copy_tree, global_norm, tree_map

log = logging.getLogger(__name__)

MODEL_KINDS = ("logreg", "lstm", "channelwise")
FUSION_MODES = ("none", "waveform")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 50
    batch_size: int = 32
    seed: int = 0
    l2: float = 0.0
    patience: int = 5
    clip_norm: float = 5.0
    hidden: int = 16
    channel_hidden: int = 4
    waveform_units: int = 8

    def __post_init__(self):
        if self.learning_rate < 0 or self.l2 < 0:
            raise ValidationError("learning rate and l2 must be nonnegative")
        for name in ("epochs", "batch_size", "patience", "hidden", "channel_hidden", "waveform_units"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be positive")
        if self.clip_norm <= 0:
            raise ValidationError("clip_norm must be positive")

    @classmethod
    def from_dict(cls, d) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown training option(s): {sorted(unknown)}")
        return cls(**d)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True, eq=False)
class ModelData:
    """Model-ready inputs for a set of stays.

    ``seq`` is the standardised ``(N, T, K)`` clinical series, ``static`` the
    per-stay clinical summary used by logistic regression and ``wf`` the
    standardised waveform inputs (``None`` when absent).
    """

    seq: np.ndarray
    static: np.ndarray
    y: np.ndarray
    wf: np.ndarray | None = None
    stay_ids: tuple = ()

    def __post_init__(self):
        n = len(self.y)
        if len(self.seq) != n or len(self.static) != n or (self.wf is not None and len(self.wf) != n):
            raise DimensionMismatch("model inputs disagree on the number of stays")

    def __len__(self):
        return len(self.y)

    def take(self, idx) -> "ModelData":
        ids = tuple(self.stay_ids[i] for i in idx) if self.stay_ids else ()
        wf = None if self.wf is None else self.wf[idx]
        return ModelData(self.seq[idx], self.static[idx], self.y[idx], wf, ids)


def _fusion_flag(fusion) -> bool:
    if isinstance(fusion, bool):
        return fusion
    if fusion not in FUSION_MODES:
        raise ValidationError(f"fusion must be one of {FUSION_MODES}, got {fusion!r}")
    return fusion == "waveform"


def logreg_inputs(data: ModelData, fusion: bool) -> np.ndarray:
    """Clinical summary, with waveform inputs appended for the fusion variant."""
    if not fusion:
        return data.static
    if data.wf is None:
        raise DimensionMismatch("fusion variant needs waveform inputs")
    return np.hstack([data.static, data.wf])


def init_model(kind: str, fusion, data: ModelData, cfg: TrainConfig):
    fusion = _fusion_flag(fusion)
    if kind == "logreg":
        return init_logreg(logreg_inputs(data, fusion).shape[1], cfg.l2, fusion)
    if kind not in MODEL_KINDS:
        raise ValidationError(f"unknown model kind {kind!r}")
    n_wf = data.wf.shape[1] if fusion else 0
    if fusion and data.wf is None:
        raise DimensionMismatch("fusion variant needs waveform inputs")
    return init_sequence_model(
        cfg.seed, kind, data.seq.shape[2], n_wf, cfg.hidden, cfg.channel_hidden, cfg.waveform_units
    )


def loss_grad(params, data: ModelData, l2: float = 0.0):
    if isinstance(params, LogRegParams):
        return logreg_loss_grad(params, logreg_inputs(data, params.uses_waveform), data.y)
    wf = data.wf if params.uses_waveform else None
    return fusion_loss_grad(params, data.seq, wf, data.y, l2)


def predict(params, data: ModelData) -> np.ndarray:
    """Mortality probabilities for every stay in ``data``."""
    if isinstance(params, LogRegParams):
        return np.atleast_1d(logreg_forward(params, logreg_inputs(data, params.uses_waveform)))
    if not isinstance(params, FusionParams):
        raise TypeError(f"cannot score with {type(params).__name__}")
    wf = data.wf if params.uses_waveform else None
    return np.atleast_1d(fusion_forward(params, data.seq, wf))


def _val_auc(params, val: ModelData | None):
    if val is None or len(val) == 0:
        return None
    try:
        return auc_roc(predict(params, val), val.y)
    except OneClassOnly:
        return None


def train(kind: str, fusion, train_set: ModelData, val_set: ModelData | None, cfg: TrainConfig = TrainConfig()):
    """Fit one model; returns ``(best params, history)``.

    ``history`` is a list of ``{"epoch", "loss", "val_auc_roc"}`` dicts. The
    parameters with the best validation AUC-ROC are returned; training stops
    after ``cfg.patience`` epochs without improvement. Without a usable
    validation set the last epoch's parameters are returned.
    """
    if len(train_set) == 0:
        raise ValidationError("empty training set")
    y = np.asarray(train_set.y)
    if y.sum() == 0:
        raise NoMinorityInTraining("training set has no positive (deceased) stay")
    params = init_model(kind, fusion, train_set, cfg)
    l2 = 0.0 if kind == "logreg" else cfg.l2
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(4)[3])
    best = copy_tree(params)
    best_auc = -np.inf
    stale = 0
    history = []
    n = len(train_set)
    for epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            loss, grad = loss_grad(params, train_set.take(idx), l2)
            norm = global_norm(grad)
            if norm > cfg.clip_norm:
                grad = tree_map(lambda g: g * (cfg.clip_norm / norm), grad)
            params = tree_map(lambda p, g: p - cfg.learning_rate * g, params, grad)
            total += loss * len(idx)
        val_auc = _val_auc(params, val_set)
        history.append({"epoch": epoch, "loss": total / n, "val_auc_roc": val_auc})
        log.debug("%s epoch %d loss %.5f val auc %s", kind, epoch, total / n, val_auc)
        if val_auc is None:
            best = copy_tree(params)
            continue
        if val_auc > best_auc:
            best_auc = val_auc
            best = copy_tree(params)
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    return best, history
