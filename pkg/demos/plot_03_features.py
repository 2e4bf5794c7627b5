"""
The twelve waveform features
============================

Compute the feature vector for a synthetic trace and check that the
correlogram power spectrum accounts for all of the signal's power.
"""

import numpy as np

from vitalforge.features import FEATURE_NAMES, averaged_power, extract_features, power_from_psd, psd
from vitalforge.preprocess import CleanSignal

rng = np.random.default_rng(3)
s = CleanSignal(75 + np.cumsum(rng.normal(0, 0.2, 3600)), 1.0)

fv = extract_features(s)
for name, value in zip(FEATURE_NAMES, fv.as_array()):
    print(f"{name:>16s}  {value:12.4f}")

###############################################################################
# Averaged power in the time domain equals the total power under the PSD.

p = psd(s)
print(f"time domain {averaged_power(s):.10f}")
print(f"from PSD    {power_from_psd(p):.10f}")
print(f"strongest non-DC bin at {p.freqs_hz[1 + np.argmax(p.density[1:])]:.4f} Hz")
