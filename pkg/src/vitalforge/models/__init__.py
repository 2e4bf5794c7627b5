"""Logistic regression, LSTM and channel-wise LSTM models, with optional waveform fusion."""

from .checkpoint import load_checkpoint, save_checkpoint
from .fusion import fusion_forward, fusion_logits, fusion_loss_grad, init_sequence_model
from .logreg import logreg_forward, logreg_loss_grad
from .lstm import channelwise_forward, lstm_forward
from .params import ChannelwiseParams, Dense, FusionParams, LogRegParams, LstmParams
from .train import MODEL_KINDS, ModelData, TrainConfig, predict, train

__all__ = [
    "ChannelwiseParams",
    "Dense",
    "FusionParams",
    "LogRegParams",
    "LstmParams",
    "MODEL_KINDS",
    "ModelData",
    "TrainConfig",
    "channelwise_forward",
    "fusion_forward",
    "fusion_logits",
    "fusion_loss_grad",
    "init_sequence_model",
    "load_checkpoint",
    "logreg_forward",
    "logreg_loss_grad",
    "lstm_forward",
    "predict",
    "save_checkpoint",
    "train",
]
