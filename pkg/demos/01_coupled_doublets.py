"""Two weakly coupled spins without decoupling.

Each chemical shift splits into a doublet of width J, and the FID carries a
cos(pi J t) envelope on top of the two carriers.
"""

import numpy as np

from homodecouple import SpinSystem, acquire, find_peaks, fit_envelope, spectrum

system = SpinSystem.from_hz(120.0, 100.0, 1.0)
print(f"2piJ / |wI - wS| = {system.weak_coupling_ratio:.3f}")

# 2 s of free precession sampled every millisecond
fid = acquire(system, None, n_samples=2000, dwell=1e-3)
t = fid.times
closed_form = 0.5 * (np.cos(2 * np.pi * 120 * t) + np.cos(2 * np.pi * 100 * t)) * np.cos(np.pi * t)
print(f"max |FID - closed form| = {np.max(np.abs(fid.samples - closed_form)):.2e}")

# truncating at 2/J puts every doublet line on a bin of the native grid
spec = spectrum(fid, truncate_at=2.0, zero_fill_factor=1)
for p in find_peaks(spec):
    print(f"line at {p.frequency:8.3f} Hz, height {p.height:.3f}")

fit = fit_envelope(fid)
print(f"envelope fit: J = {fit.envelope_frequency:.6f} Hz (residual {fit.fit_residual:.1e})")
