"""Heart-rate signal preparation: cleaning, smoothing, FIR low-pass and 1 Hz resampling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AllInvalid, BadCutoff, BadTapCount, BadWindow, TooShort, ValidationError

DEFAULT_WINDOW = 5
DEFAULT_TAPS = 31
CUTOFF_FRACTION = 0.9


@dataclass(frozen=True, eq=False)
class CleanSignal:
    """Uniformly sampled signal with no undefined or zero samples."""

    samples: np.ndarray
    fs_hz: float

    def __post_init__(self):
        x = np.array(self.samples, dtype=np.float64)
        if x.ndim != 1 or x.size < 1:
            raise ValidationError("a clean signal needs at least one sample")
        if not np.isfinite(x).all() or (x == 0).any():
            raise ValidationError("clean signal contains undefined or zero samples")
        if not (self.fs_hz > 0 and math.isfinite(self.fs_hz)):
            raise ValidationError(f"bad sampling rate {self.fs_hz}")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "fs_hz", float(self.fs_hz))

    def __len__(self):
        return len(self.samples)

    def __eq__(self, other):
        if not isinstance(other, CleanSignal):
            return NotImplemented
        return self.fs_hz == other.fs_hz and np.array_equal(self.samples, other.samples)

    __hash__ = None

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.fs_hz


@dataclass(frozen=True, eq=False)
class FirFilter:
    taps: np.ndarray
    cutoff_hz: float
    fs_hz: float

    def __post_init__(self):
        t = np.array(self.taps, dtype=np.float64)
        t.setflags(write=False)
        object.__setattr__(self, "taps", t)

    @property
    def n_taps(self) -> int:
        return len(self.taps)

    def response(self, freqs_hz) -> np.ndarray:
        """Magnitude response ``|H(f)|`` at the given frequencies."""
        k = np.arange(self.n_taps) - (self.n_taps - 1) / 2
        w = 2 * np.pi * np.asarray(freqs_hz, dtype=float)[..., None] / self.fs_hz
        return np.abs(np.exp(-1j * w * k) @ self.taps)


def _valid_mask(x):
    return np.isfinite(x) & (x != 0)


def clean(raw) -> CleanSignal:
    """Drop leading invalid samples and forward-fill the rest.

    A sample is invalid when it is undefined (``nan``) or exactly zero.
    ``raw`` is anything with ``samples`` and ``fs_hz``, so a ``CleanSignal``
    passes through unchanged.
    """
    x = np.asarray(raw.samples, dtype=np.float64)
    valid = _valid_mask(x)
    if not valid.any():
        raise AllInvalid("record has no finite, nonzero sample")
    first = int(np.argmax(valid))
    x = x[first:]
    valid = valid[first:]
    # index of the most recent valid sample at each position
    last_valid = np.maximum.accumulate(np.where(valid, np.arange(len(x)), 0))
    return CleanSignal(x[last_valid], raw.fs_hz)


def moving_average(s: CleanSignal, window: int = DEFAULT_WINDOW) -> CleanSignal:
    """Centred moving average whose window shrinks at the signal ends.

    ``out[i]`` is the mean of ``s[max(0, i-h) : min(n, i+h+1)]`` with
    ``h = window // 2``. Computed as ``s[i]`` plus the mean deviation from
    ``s[i]`` so constant stretches come back exactly.
    """
    if isinstance(window, bool) or not isinstance(window, (int, np.integer)) or window < 1 or window % 2 == 0:
        raise BadWindow(f"window must be a positive odd integer, got {window!r}")
    x = s.samples
    n = len(x)
    half = window // 2
    if half == 0 or n == 1:
        return s
    acc = np.zeros(n)
    count = np.ones(n)
    for off in range(1, half + 1):
        if off >= n:
            break
        d_ahead = x[off:] - x[:-off]
        acc[:-off] += d_ahead
        acc[off:] -= d_ahead
        count[:-off] += 1
        count[off:] += 1
    out = x + acc / count
    out = np.clip(out, x.min(), x.max())
    return CleanSignal(out, s.fs_hz)


def design_lowpass(cutoff_hz: float, n_taps: int = DEFAULT_TAPS, fs_hz: float = 1.0) -> FirFilter:
    """Hamming-windowed sinc low-pass, normalised to unity DC gain.

    Raises
    ------
    BadCutoff
        Unless ``0 < cutoff_hz < fs_hz / 2``.
    BadTapCount
        Unless ``n_taps`` is a positive odd integer.
    """
    if not (0 < cutoff_hz < fs_hz / 2):
        raise BadCutoff(f"cutoff {cutoff_hz} Hz not inside (0, {fs_hz / 2}) Hz")
    if isinstance(n_taps, bool) or not isinstance(n_taps, (int, np.integer)) or n_taps < 1 or n_taps % 2 == 0:
        raise BadTapCount(f"tap count must be a positive odd integer, got {n_taps!r}")
    m = np.arange(n_taps) - (n_taps - 1) // 2
    fc = cutoff_hz / fs_hz
    h = 2 * fc * np.sinc(2 * fc * m) * np.hamming(n_taps)
    h = h / h.sum()
    # exact mirror symmetry despite rounding in the window and the sum
    h = 0.5 * (h + h[::-1])
    return FirFilter(h, float(cutoff_hz), float(fs_hz))


def default_cutoff(fs_orig_hz: float) -> float:
    return CUTOFF_FRACTION * min(fs_orig_hz / 2, 0.5)


def apply_fir(s: CleanSignal, f: FirFilter) -> CleanSignal:
    """Zero-phase filtering with edge-replicated padding, length preserved.

    Works on deviations from the current sample, which is equivalent to plain
    convolution for unity-gain taps and leaves constants bit-exact.
    """
    x = s.samples
    n = len(x)
    half = (f.n_taps - 1) // 2
    padded = np.concatenate([np.full(half, x[0]), x, np.full(half, x[-1])])
    acc = np.zeros(n)
    for k, tap in enumerate(f.taps):
        acc += tap * (padded[k : k + n] - x)
    return CleanSignal(x + acc, s.fs_hz)


def resample_to_1hz(s: CleanSignal, n_taps: int = DEFAULT_TAPS, cutoff_hz: float | None = None) -> CleanSignal:
    """Linear interpolation onto a 1 Hz grid followed by the anti-aliasing FIR.

    Input already at 1 Hz is returned unchanged. The grid runs from the first
    sample to the last, ``floor((n - 1) / fs) + 1`` points.
    """
    if not (0 < s.fs_hz <= 1):
        raise ValidationError(f"resampling to 1 Hz needs fs in (0, 1], got {s.fs_hz}")
    if s.fs_hz == 1.0:
        return s
    n = len(s)
    if n < 2:
        raise TooShort("need at least two samples to interpolate")
    span = (n - 1) / s.fs_hz
    n_out = math.floor(span + 1e-9) + 1
    grid = np.arange(n_out, dtype=np.float64)
    t = np.arange(n) / s.fs_hz
    y = np.interp(grid, t, s.samples)
    up = CleanSignal(y, 1.0)
    if cutoff_hz is None:
        cutoff_hz = default_cutoff(s.fs_hz)
    return apply_fir(up, design_lowpass(cutoff_hz, n_taps, 1.0))


def prepare(raw, window: int = DEFAULT_WINDOW, n_taps: int = DEFAULT_TAPS, cutoff_hz: float | None = None) -> CleanSignal:
    """Full chain: clean, smooth, then bring to 1 Hz."""
    return resample_to_1hz(moving_average(clean(raw), window), n_taps, cutoff_hz)
