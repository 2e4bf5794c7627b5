"""Versioned JSON checkpoints.

Arrays are stored with their shape and every value written as the shortest
decimal that round-trips, so loading reproduces the parameters bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import fields, is_dataclass
from pathlib import Path

import numpy as np

from ..errors import ValidationError
from .params import REGISTRY

FORMAT = "vitalforge-checkpoint"
VERSION = 1


def _encode(obj):
    if isinstance(obj, np.ndarray):
        return {"shape": list(obj.shape), "data": [float(v) for v in obj.ravel()]}
    if isinstance(obj, list):
        return {"list": [_encode(v) for v in obj]}
    if is_dataclass(obj):
        return {"type": type(obj).__name__, "fields": {f.name: _encode(getattr(obj, f.name)) for f in fields(obj)}}
    if obj is None or isinstance(obj, (bool, int, float, str)):
        return {"value": obj}
    raise TypeError(f"cannot checkpoint {type(obj).__name__}")


def _decode(node):
    if "shape" in node:
        return np.array(node["data"], dtype=np.float64).reshape(node["shape"])
    if "list" in node:
        return [_decode(v) for v in node["list"]]
    if "type" in node:
        cls = REGISTRY.get(node["type"])
        if cls is None:
            raise ValidationError(f"unknown parameter type {node['type']!r} in checkpoint")
        return cls(**{k: _decode(v) for k, v in node["fields"].items()})
    return node["value"]


def dumps(params, meta=None) -> str:
    doc = {"format": FORMAT, "version": VERSION, "meta": meta or {}, "params": _encode(params)}
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def loads(text: str):
    """Returns ``(params, meta)``."""
    doc = json.loads(text)
    if doc.get("format") != FORMAT:
        raise ValidationError("not a vitalforge checkpoint")
    if doc.get("version") != VERSION:
        raise ValidationError(f"unsupported checkpoint version {doc.get('version')}")
    return _decode(doc["params"]), doc.get("meta", {})


def save_checkpoint(path, params, meta=None) -> Path:
    path = Path(path)
    path.write_text(dumps(params, meta))
    return path


def load_checkpoint(path):
    return loads(Path(path).read_text())
