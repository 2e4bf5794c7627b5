"""
Cleaning, smoothing and resampling
==================================

Walk one noisy low-rate heart-rate trace through the preparation chain and
look at the low-pass filter that guards the 1 Hz resampling.
"""

from types import SimpleNamespace

import numpy as np

from vitalforge.preprocess import clean, default_cutoff, design_lowpass, moving_average, prepare, resample_to_1hz

rng = np.random.default_rng(0)
fs = 0.25
t = np.arange(400) / fs
x = np.round(80 + 4 * np.sin(2 * np.pi * t / 600) + rng.normal(0, 1.5, t.size), 1)
x[:3] = np.nan  # leading dropout is discarded
x[rng.random(t.size) < 0.03] = 0.0  # zeros are artifacts, held over
raw = SimpleNamespace(samples=x, fs_hz=fs)

###############################################################################
# Step by step.

c = clean(raw)
m = moving_average(c, 5)
r = resample_to_1hz(m)
print(f"raw {x.size} -> clean {len(c)} -> smoothed {len(m)} -> 1 Hz {len(r)}")
print(f"mean before {np.nanmean(x[x > 0]):.3f}, after {r.samples.mean():.3f}")

###############################################################################
# ``prepare`` does the same in one call.

assert np.array_equal(prepare(raw).samples, r.samples)

###############################################################################
# The default filter for a 0.25 Hz input, inspected in the frequency domain.

f = design_lowpass(default_cutoff(fs), 31, 1.0)
freqs = np.array([0.0, 0.05, 0.1, 0.125, 0.2, 0.3, 0.45])
for fr, g in zip(freqs, f.response(freqs)):
    print(f"{fr:5.3f} Hz  {20 * np.log10(max(g, 1e-12)):8.1f} dB")
