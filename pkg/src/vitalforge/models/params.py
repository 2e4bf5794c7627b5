"""Parameter containers and small tree utilities over them.

Parameters are plain dataclasses holding float64 arrays, possibly nested and
possibly inside lists. Non-array fields (``l2``) are hyperparameters and are
carried along untouched by the tree functions.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, is_dataclass, replace

import numpy as np


@dataclass
class Dense:
    W: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)

    @property
    def shape(self):
        return self.W.shape


@dataclass
class LogRegParams:
    w: np.ndarray  # (D,)
    b: np.ndarray  # 0-d
    l2: float = 0.0
    uses_waveform: bool = False


@dataclass
class LstmParams:
    """Gate blocks are stacked in the order input, forget, cell, output."""

    W: np.ndarray  # (4H, D)
    U: np.ndarray  # (4H, H)
    b: np.ndarray  # (4H,)

    @property
    def hidden_size(self) -> int:
        return self.U.shape[1]

    @property
    def input_size(self) -> int:
        return self.W.shape[1]


@dataclass
class ChannelwiseParams:
    channels: list  # one LstmParams with input size 1 per clinical channel
    top: LstmParams

    @property
    def hidden_size(self) -> int:
        return self.top.hidden_size

    @property
    def n_channels(self) -> int:
        return len(self.channels)


@dataclass
class FusionParams:
    """Sequence encoder, optional waveform branch and the final dense layer.

    With ``waveform=None`` this is the clinical-only model.
    """

    base: LstmParams | ChannelwiseParams
    waveform: Dense | None
    head: Dense  # (1, H + F)

    @property
    def uses_waveform(self) -> bool:
        return self.waveform is not None


REGISTRY = {cls.__name__: cls for cls in (Dense, LogRegParams, LstmParams, ChannelwiseParams, FusionParams)}

# leaves treated as weights for l2 purposes
WEIGHT_NAMES = frozenset({"W", "U", "w"})


def tree_map(fn, tree, *rest):
    """Apply ``fn`` to corresponding array leaves of one or more trees."""
    if isinstance(tree, np.ndarray):
        return fn(tree, *rest)
    if isinstance(tree, list):
        return [tree_map(fn, t, *(r[i] for r in rest)) for i, t in enumerate(tree)]
    if is_dataclass(tree):
        changes = {}
        for f in fields(tree):
            v = getattr(tree, f.name)
            if isinstance(v, (np.ndarray, list)) or is_dataclass(v):
                changes[f.name] = tree_map(fn, v, *(getattr(r, f.name) for r in rest))
        return replace(tree, **changes)
    return tree


def leaves(tree, prefix=""):
    """``(path, array)`` pairs in a fixed depth-first order."""
    if isinstance(tree, np.ndarray):
        return [(prefix, tree)]
    out = []
    if isinstance(tree, list):
        for i, t in enumerate(tree):
            out.extend(leaves(t, f"{prefix}[{i}]"))
    elif is_dataclass(tree):
        for f in fields(tree):
            out.extend(leaves(getattr(tree, f.name), f"{prefix}.{f.name}" if prefix else f.name))
    return out


def copy_tree(tree):
    return tree_map(np.array, tree)


def zeros_like(tree):
    return tree_map(np.zeros_like, tree)


def flatten(tree) -> np.ndarray:
    return np.concatenate([a.ravel() for _, a in leaves(tree)]) if leaves(tree) else np.empty(0)


def unflatten(template, vector):
    vector = np.asarray(vector, dtype=np.float64)
    pos = [0]

    def take(a):
        n = a.size
        out = vector[pos[0] : pos[0] + n].reshape(a.shape).copy()
        pos[0] += n
        return out

    tree = tree_map(take, template)
    if pos[0] != vector.size:
        raise ValueError("vector length does not match the parameter tree")
    return tree


def global_norm(tree) -> float:
    return float(np.sqrt(sum(float(np.vdot(a, a)) for _, a in leaves(tree))))


def is_weight(path: str) -> bool:
    return path.rsplit(".", 1)[-1] in WEIGHT_NAMES


def l2_penalty(tree, l2: float) -> float:
    if l2 == 0:
        return 0.0
    return 0.5 * l2 * sum(float(np.vdot(a, a)) for p, a in leaves(tree) if is_weight(p))


def add_l2_grad(grad, tree, l2: float):
    """``grad + l2 * w`` on weight leaves only."""
    if l2 == 0:
        return grad
    gl = dict(leaves(grad))
    for path, a in leaves(tree):
        if is_weight(path):
            gl[path] += l2 * a
    return grad


def all_finite(tree) -> bool:
    return all(np.isfinite(a).all() for _, a in leaves(tree))
