"""LSTM and channel-wise LSTM encoders with hand-written backpropagation through time.

Cell, from a zero initial state::

    z_t = W x_t + U h_{t-1} + b
    i, f, o = sigmoid(z_i), sigmoid(z_f), sigmoid(z_o)
    g = tanh(z_g)
    c_t = f * c_{t-1} + i * g
    h_t = o * tanh(c_t)

All functions take batched ``(B, T, D)`` input; ``lstm_forward`` also
accepts a single ``(T, D)`` sequence.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from ..errors import DimensionMismatch
from .params import ChannelwiseParams, LstmParams

FORGET_BIAS = 1.0


def init_lstm(rng: np.random.Generator, input_size: int, hidden_size: int, forget_bias: float = FORGET_BIAS) -> LstmParams:
    scale = 1.0 / np.sqrt(hidden_size)
    H = hidden_size
    b = np.zeros(4 * H)
    b[H : 2 * H] = forget_bias
    return LstmParams(
        W=rng.uniform(-scale, scale, size=(4 * H, input_size)),
        U=rng.uniform(-scale, scale, size=(4 * H, H)),
        b=b,
    )


def zero_lstm(input_size: int, hidden_size: int) -> LstmParams:
    H = hidden_size
    return LstmParams(np.zeros((4 * H, input_size)), np.zeros((4 * H, H)), np.zeros(4 * H))


def init_channelwise(rng, n_channels: int, channel_hidden: int, hidden_size: int) -> ChannelwiseParams:
    chans = [init_lstm(rng, 1, channel_hidden) for _ in range(n_channels)]
    return ChannelwiseParams(chans, init_lstm(rng, n_channels * channel_hidden, hidden_size))


def _check(p: LstmParams, x: np.ndarray):
    H = p.U.shape[1]
    if p.W.shape[0] != 4 * H or p.U.shape != (4 * H, H) or p.b.shape != (4 * H,):
        raise DimensionMismatch("inconsistent LSTM parameter shapes")
    if x.ndim != 3 or x.shape[2] != p.W.shape[1]:
        raise DimensionMismatch(f"input feature size {x.shape[-1]} != {p.W.shape[1]}")


def lstm_forward_cache(p: LstmParams, x: np.ndarray):
    """Hidden sequence ``(B, T, H)`` plus what the backward pass needs."""
    _check(p, x)
    B, T, _ = x.shape
    H = p.hidden_size
    xz = x @ p.W.T + p.b
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    hs = np.empty((B, T, H))
    cache = {"x": x, "gates": np.empty((T, B, 4 * H)), "c": np.empty((T + 1, B, H)), "h": np.empty((T + 1, B, H)), "tc": np.empty((T, B, H))}
    cache["c"][0] = c
    cache["h"][0] = h
    for t in range(T):
        z = xz[:, t] + h @ p.U.T
        ifo = expit(z[:, np.r_[0:2 * H, 3 * H:4 * H]])
        i, f, o = ifo[:, :H], ifo[:, H:2 * H], ifo[:, 2 * H:]
        g = np.tanh(z[:, 2 * H:3 * H])
        c = f * c + i * g
        tc = np.tanh(c)
        h = o * tc
        hs[:, t] = h
        gates = cache["gates"][t]
        gates[:, :H], gates[:, H:2 * H], gates[:, 2 * H:3 * H], gates[:, 3 * H:] = i, f, g, o
        cache["c"][t + 1] = c
        cache["h"][t + 1] = h
        cache["tc"][t] = tc
    return hs, cache


def lstm_forward(p: LstmParams, seq) -> np.ndarray:
    """Hidden state sequence. ``(T, D) -> (T, H)`` or ``(B, T, D) -> (B, T, H)``."""
    x = np.asarray(seq, dtype=np.float64)
    if x.ndim == 2:
        return lstm_forward_cache(p, x[None])[0][0]
    return lstm_forward_cache(p, x)[0]


def lstm_backward(p: LstmParams, cache, dhs: np.ndarray):
    """Gradients given ``dL/dh_t`` for every step, ``dhs`` shaped ``(B, T, H)``.

    Returns ``(grad LstmParams, dL/dx)``.
    """
    x = cache["x"]
    B, T, D = x.shape
    H = p.hidden_size
    dW = np.zeros_like(p.W)
    dU = np.zeros_like(p.U)
    db = np.zeros_like(p.b)
    dx = np.empty_like(x)
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    dz = np.empty((B, 4 * H))
    for t in range(T - 1, -1, -1):
        gates = cache["gates"][t]
        i, f, g, o = gates[:, :H], gates[:, H:2 * H], gates[:, 2 * H:3 * H], gates[:, 3 * H:]
        tc = cache["tc"][t]
        c_prev = cache["c"][t]
        h_prev = cache["h"][t]
        dh = dhs[:, t] + dh_next
        do = dh * tc
        dc = dh * o * (1.0 - tc * tc) + dc_next
        dz[:, :H] = dc * g * i * (1.0 - i)
        dz[:, H:2 * H] = dc * c_prev * f * (1.0 - f)
        dz[:, 2 * H:3 * H] = dc * i * (1.0 - g * g)
        dz[:, 3 * H:] = do * o * (1.0 - o)
        dc_next = dc * f
        dW += dz.T @ x[:, t]
        dU += dz.T @ h_prev
        db += dz.sum(axis=0)
        dh_next = dz @ p.U
        dx[:, t] = dz @ p.W
    return LstmParams(dW, dU, db), dx


def channelwise_forward_cache(p: ChannelwiseParams, x: np.ndarray):
    """Top-level hidden sequence ``(B, T, H)`` for a ``(B, T, K)`` batch."""
    if x.ndim != 3 or x.shape[2] != p.n_channels:
        raise DimensionMismatch(f"expected {p.n_channels} channels, got input shaped {x.shape}")
    per = [lstm_forward_cache(cp, x[:, :, k : k + 1]) for k, cp in enumerate(p.channels)]
    stacked = np.concatenate([hs for hs, _ in per], axis=2)
    top_hs, top_cache = lstm_forward_cache(p.top, stacked)
    return top_hs, {"channels": [c for _, c in per], "top": top_cache}


def channelwise_forward(p: ChannelwiseParams, seq) -> np.ndarray:
    """Final top-level hidden state: ``(T, K) -> (H,)`` or ``(B, T, K) -> (B, H)``."""
    x = np.asarray(seq, dtype=np.float64)
    single = x.ndim == 2
    hs, _ = channelwise_forward_cache(p, x[None] if single else x)
    return hs[0, -1] if single else hs[:, -1]


def channelwise_backward(p: ChannelwiseParams, cache, dhs: np.ndarray):
    g_top, d_stacked = lstm_backward(p.top, cache["top"], dhs)
    grads = []
    dx = []
    start = 0
    for cp, cc in zip(p.channels, cache["channels"]):
        h = cp.hidden_size
        g, d = lstm_backward(cp, cc, d_stacked[:, :, start : start + h])
        grads.append(g)
        dx.append(d)
        start += h
    return ChannelwiseParams(grads, g_top), np.concatenate(dx, axis=2)


def encode_cache(p, x):
    if isinstance(p, ChannelwiseParams):
        return channelwise_forward_cache(p, x)
    return lstm_forward_cache(p, x)


def encode_backward(p, cache, dhs):
    if isinstance(p, ChannelwiseParams):
        return channelwise_backward(p, cache, dhs)
    return lstm_backward(p, cache, dhs)
