"""
Cepstral smoothing
==================

A periodic ripple on the log spectrum (a voiced excitation) shows up as a
single cepstral peak; zeroing the high cepstral indices keeps only the
smooth envelope.
"""

import numpy as np

from navperception.speech_features import cepstral_smooth, cepstrum, cosine_cepstrum

n = np.arange(512)
envelope = 3.0 + 2.0 * np.cos(2 * np.pi * n / 512)
ripple = 0.8 * np.cos(2 * np.pi * n / 32)
log_power = envelope + ripple

c = cepstrum(log_power)
print("largest cepstral values (index, value):")
for k in np.argsort(-np.abs(c[:257]))[:4]:
    print(f"  {k:3d}  {c[k]: .4f}")

cc = cosine_cepstrum(log_power[:256])
print("cosine form peak beyond index 1:", int(np.argmax(np.abs(cc[2:]))) + 2)

# keep=32 still passes index 16, so the ripple survives
for keep in (8, 16, 32):
    err = np.abs(cepstral_smooth(log_power, keep) - envelope).max()
    print(f"keep={keep:2d}  max deviation from envelope {err:.2e}")
