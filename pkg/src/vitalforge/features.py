"""Twelve statistical and spectral features of a prepared heart-rate signal."""

from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass
from pathlib import Path

import numpy as np

from .errors import BadRange, DegenerateSignal, TooShort, ValidationError

FEATURE_NAMES = (
    "min",
    "max",
    "range",
    "mean",
    "median",
    "mode",
    "std",
    "variance",
    "skewness",
    "kurtosis",
    "avg_power",
    "psd_total_power",
)
CSV_HEADER = ("stay_id",) + FEATURE_NAMES + ("label",)

# substituted for skewness / kurtosis of constant signals
DEGENERATE_SKEWNESS = 0.0
DEGENERATE_KURTOSIS = 3.0


def _values(s) -> np.ndarray:
    x = s.samples if hasattr(s, "samples") else s
    return np.asarray(x, dtype=np.float64)


def _fs(s, default=1.0) -> float:
    return float(getattr(s, "fs_hz", default))


@dataclass(frozen=True)
class FeatureVector:
    min: float
    max: float
    range: float
    mean: float
    median: float
    mode: float
    std: float
    variance: float
    skewness: float
    kurtosis: float
    avg_power: float
    psd_total_power: float

    def __post_init__(self):
        vals = astuple(self)
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError("feature vector has non-finite entries")
        if self.variance < 0:
            raise ValidationError("negative variance")

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=np.float64)

    @classmethod
    def from_array(cls, values) -> "FeatureVector":
        values = [float(v) for v in values]
        if len(values) != len(FEATURE_NAMES):
            raise ValidationError(f"expected {len(FEATURE_NAMES)} features, got {len(values)}")
        return cls(*values)


@dataclass(frozen=True, eq=False)
class PsdEstimate:
    """One-sided PSD. ``density`` is doubled at interior bins so that
    ``bin_width_hz * density.sum()`` is the power over the full two-sided band.
    """

    freqs_hz: np.ndarray
    density: np.ndarray
    bin_width_hz: float
    n_fft: int


def stat_features(s) -> dict[str, float]:
    """Ten order-free statistics using population moments.

    ``skewness = m3 / m2**1.5`` and ``kurtosis = m4 / m2**2`` (normal -> 3).
    The mode is the centre of the most populated 1-unit bin
    ``[k - 0.5, k + 0.5)``; ties go to the smallest centre.

    Raises
    ------
    TooShort
        Fewer than two samples.
    DegenerateSignal
        Constant input, for which skewness and kurtosis are undefined. The
        partial result is attached as ``exc.partial``.
    """
    x = _values(s)
    if x.size < 2:
        raise TooShort("statistics need at least two samples")
    lo = float(x.min())
    hi = float(x.max())
    mean = float(np.mean(x))
    centred = x - mean
    m2 = float(np.mean(centred**2))
    bins = np.floor(x + 0.5).astype(np.int64)
    centres, counts = np.unique(bins, return_counts=True)
    out = {
        "min": lo,
        "max": hi,
        "range": hi - lo,
        "mean": mean,
        "median": float(np.median(x)),
        "mode": float(centres[np.argmax(counts)]),
        "std": math.sqrt(m2),
        "variance": m2,
    }
    if hi == lo:
        exc = DegenerateSignal("constant signal: skewness and kurtosis undefined")
        exc.partial = out
        raise exc
    m3 = float(np.mean(centred**3))
    m4 = float(np.mean(centred**4))
    out["skewness"] = m3 / m2**1.5
    out["kurtosis"] = m4 / m2**2
    return out


def averaged_power(s, n1: int = 0, n2: int | None = None) -> float:
    """Mean of squared samples over the inclusive index range ``[n1, n2]``."""
    x = _values(s)
    if n2 is None:
        n2 = len(x) - 1
    if not (0 <= n1 <= n2 < len(x)):
        raise BadRange(f"need 0 <= n1 <= n2 < {len(x)}, got n1={n1}, n2={n2}")
    seg = x[n1 : n2 + 1]
    return float(np.dot(seg, seg)) / len(seg)


def biased_autocorrelation(x: np.ndarray) -> np.ndarray:
    """``r[k] = (1/N) sum_n x[n] x[n+k]`` for ``k = 0..N-1`` (linear, not circular)."""
    n = len(x)
    m = 1 << (2 * n - 1).bit_length()
    spec = np.fft.rfft(x, m)
    return np.fft.irfft(spec * spec.conj(), m)[:n] / n


def psd(s, n_fft: int | None = None) -> PsdEstimate:
    """Correlogram PSD: transform of the biased autocorrelation of the raw signal.

    The mean is not removed. The lag sequence ``r[-(N-1)..N-1]`` is folded
    onto an ``n_fft``-point frequency grid (default ``N``) and transformed;
    the density is divided by ``fs`` to give units^2 / Hz.
    """
    x = _values(s)
    fs = _fs(s)
    n = len(x)
    if n < 4:
        raise TooShort("PSD needs at least four samples")
    if n_fft is None:
        n_fft = n
    r = biased_autocorrelation(x)
    lags = np.zeros(n_fft)
    k = np.arange(n)
    np.add.at(lags, k % n_fft, r)
    np.add.at(lags, (-k[1:]) % n_fft, r[1:])
    two_sided = np.fft.rfft(lags).real / fs
    scale = max(float(np.max(np.abs(two_sided))), np.finfo(float).tiny)
    if two_sided.min() < -1e-9 * scale:
        raise ValidationError("correlogram produced a significantly negative density")
    two_sided = np.maximum(two_sided, 0.0)
    density = two_sided.copy()
    last = len(density) if n_fft % 2 else len(density) - 1
    density[1:last] *= 2
    freqs = np.arange(len(density)) * fs / n_fft
    return PsdEstimate(freqs, density, fs / n_fft, n_fft)


def power_from_psd(p: PsdEstimate) -> float:
    """Integral of the density over the whole frequency axis."""
    return float(p.bin_width_hz * p.density.sum())


def extract_features(s, on_degenerate: str = "sentinel") -> FeatureVector:
    """All twelve features of one signal.

    ``on_degenerate`` is ``"sentinel"`` (constant signal gets skewness 0 and
    kurtosis 3) or ``"raise"``.
    """
    x = _values(s)
    if x.size < 4:
        raise TooShort("feature extraction needs at least four samples")
    try:
        stats = stat_features(s)
    except DegenerateSignal as exc:
        if on_degenerate != "sentinel":
            raise
        stats = dict(exc.partial, skewness=DEGENERATE_SKEWNESS, kurtosis=DEGENERATE_KURTOSIS)
    return FeatureVector(
        avg_power=averaged_power(s),
        psd_total_power=power_from_psd(psd(s)),
        **stats,
    )


# --------------------------------------------------------------------------
# feature-matrix CSV


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_feature_csv(path, stay_ids, matrix, labels) -> None:
    """Write a feature matrix; values use 17 significant digits."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != len(FEATURE_NAMES):
        raise ValidationError(f"feature matrix must have {len(FEATURE_NAMES)} columns")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for sid, row, label in zip(stay_ids, matrix, labels):
            w.writerow([sid, *(_fmt(v) for v in row), int(label)])


def read_feature_csv(path):
    """Returns ``(stay_ids, matrix, labels)``."""
    with open(Path(path), newline="") as fh:
        r = csv.reader(fh)
        header = tuple(next(r, ()))
        if header != CSV_HEADER:
            raise ValidationError(f"unexpected feature CSV header in {path}")
        ids, rows, labels = [], [], []
        for line in r:
            if not line:
                continue
            ids.append(line[0])
            rows.append([float(v) for v in line[1:-1]])
            labels.append(int(line[-1]))
    matrix = np.array(rows, dtype=np.float64).reshape(len(rows), len(FEATURE_NAMES))
    return ids, matrix, np.array(labels, dtype=np.int64)

