"""Sequence classifiers: an LSTM-type encoder, an optional waveform branch and a final dense layer.

The waveform branch is ``relu(W_wf . wf + b_wf)``; its output is concatenated
with the encoder's final hidden state before the last layer::

    logit = head . [h_T || relu(W_wf wf + b_wf)] + b_head
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from ..errors import DimensionMismatch
from .logreg import bce_from_logits, probability
from .lstm import encode_backward, encode_cache, init_channelwise, init_lstm
from .params import ChannelwiseParams, Dense, FusionParams, add_l2_grad, l2_penalty

DEFAULT_HIDDEN = 16
DEFAULT_CHANNEL_HIDDEN = 4
DEFAULT_WAVEFORM_UNITS = 8


def init_dense(rng, n_in: int, n_out: int) -> Dense:
    scale = np.sqrt(6.0 / (n_in + n_out))
    return Dense(rng.uniform(-scale, scale, size=(n_out, n_in)), np.zeros(n_out))


def init_sequence_model(
    seed,
    kind: str,
    n_channels: int,
    n_waveform: int = 0,
    hidden: int = DEFAULT_HIDDEN,
    channel_hidden: int = DEFAULT_CHANNEL_HIDDEN,
    waveform_units: int = DEFAULT_WAVEFORM_UNITS,
) -> FusionParams:
    """Initial parameters for ``kind`` in ``{"lstm", "channelwise"}``.

    Encoder, waveform branch and head draw from separate streams of ``seed``,
    so a fusion model and its clinical-only twin start from the same encoder
    and the same head columns for the encoder output.
    """
    ss = np.random.SeedSequence(seed)
    enc_rng, wf_rng, head_rng = (np.random.default_rng(s) for s in ss.spawn(3))
    if kind == "lstm":
        base = init_lstm(enc_rng, n_channels, hidden)
    elif kind == "channelwise":
        base = init_channelwise(enc_rng, n_channels, channel_hidden, hidden)
    else:
        raise ValueError(f"unknown sequence model kind {kind!r}")
    scale = 1.0 / np.sqrt(hidden)
    head_W = head_rng.uniform(-scale, scale, size=(1, hidden))
    waveform = None
    if n_waveform:
        waveform = init_dense(wf_rng, n_waveform, waveform_units)
        extra = wf_rng.uniform(-scale, scale, size=(1, waveform_units))
        head_W = np.hstack([head_W, extra])
    return FusionParams(base, waveform, Dense(head_W, np.zeros(1)))


def _forward(p: FusionParams, seq: np.ndarray, wf: np.ndarray | None):
    hs, enc_cache = encode_cache(p.base, seq)
    h_last = hs[:, -1]
    parts = [h_last]
    pre = None
    if p.waveform is not None:
        if wf is None or wf.ndim != 2 or wf.shape[1] != p.waveform.W.shape[1] or len(wf) != len(seq):
            raise DimensionMismatch("waveform inputs do not match the waveform branch")
        pre = wf @ p.waveform.W.T + p.waveform.b
        parts.append(np.maximum(pre, 0.0))
    joined = np.concatenate(parts, axis=1)
    if joined.shape[1] != p.head.W.shape[1]:
        raise DimensionMismatch("final dense layer does not match its inputs")
    z = joined @ p.head.W[0] + p.head.b[0]
    return z, (hs.shape, enc_cache, joined, pre)


def _batch(seq, wf):
    seq = np.asarray(seq, dtype=np.float64)
    single = seq.ndim == 2
    if single:
        seq = seq[None]
        if wf is not None:
            wf = np.asarray(wf, dtype=np.float64)[None]
    elif wf is not None:
        wf = np.asarray(wf, dtype=np.float64)
    return seq, wf, single


def fusion_logits(p: FusionParams, seq, wf=None) -> np.ndarray:
    seq, wf, single = _batch(seq, wf)
    z, _ = _forward(p, seq, wf)
    return z[0] if single else z


def fusion_forward(p: FusionParams, seq, wf=None):
    """Mortality probability for one ``(T, K)`` sequence or a ``(B, T, K)`` batch."""
    seq, wf, single = _batch(seq, wf)
    z, _ = _forward(p, seq, wf)
    prob = probability(z)
    return float(prob[0]) if single else prob


def fusion_loss_grad(p: FusionParams, seq, wf, y, l2: float = 0.0):
    """``(loss, grad FusionParams)`` for mean BCE plus ``l2 / 2`` times squared weights."""
    seq = np.asarray(seq, dtype=np.float64)
    wf = None if wf is None else np.asarray(wf, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    z, (hs_shape, enc_cache, joined, pre) = _forward(p, seq, wf)
    B = len(y)
    loss = bce_from_logits(z, y) + l2_penalty(p, l2)
    dz = (expit(z) - y) / B
    g_head = Dense((dz @ joined)[None, :], np.array([dz.sum()]))
    d_joined = dz[:, None] * p.head.W[0][None, :]
    H = hs_shape[2]
    dhs = np.zeros(hs_shape)
    dhs[:, -1] = d_joined[:, :H]
    g_base, _ = encode_backward(p.base, enc_cache, dhs)
    g_wf = None
    if p.waveform is not None:
        d_pre = d_joined[:, H:] * (pre > 0)
        g_wf = Dense(d_pre.T @ wf, d_pre.sum(axis=0))
    grad = FusionParams(g_base, g_wf, g_head)
    return loss, add_l2_grad(grad, p, l2)


def encoder_hidden_size(p: FusionParams) -> int:
    return p.base.hidden_size if isinstance(p.base, ChannelwiseParams) else p.base.U.shape[1]
