"""Undoing the blur from rf inhomogeneity.

Lines sit at (theta/2) w / 2pi, so a spread of rf amplitudes smears each
line in proportion to its frequency.  Near a region of interest the blur is
close to shift invariant and can be inverted by non-negative least squares
with a point spread function calibrated on an isolated line.
"""

import numpy as np

from homodecouple import BlurredSpectrum, PointSpreadFunction, SpinSystem, deconvolve
from homodecouple.deconv import design_matrix, simulate_rf_ensemble

# synthetic test: Gaussian blur, two lines, SNR 100
df = 0.05
f = np.arange(0, 20 + df / 2, df)
offsets = np.arange(-0.5, 0.5 + df / 2, df)
psf = PointSpreadFunction.normalized(offsets, np.exp(-0.5 * (offsets / 0.1) ** 2))
grid = np.arange(1.0, 19.0 + 1e-9, 0.2)
truth = np.zeros_like(grid)
truth[np.isclose(grid, 10.0)] = 1.0
truth[np.isclose(grid, 12.0)] = 0.8
clean = design_matrix(f, psf, grid) @ truth
noise = clean.max() / 100
z = BlurredSpectrum(f, clean + np.random.default_rng(1).normal(0, noise, f.size), noise)
report = deconvolve(z, psf, grid)
print(f"condition number {report.condition_number:.2f}")
for line in report.significant(3):
    print(f"  {line.frequency:5.2f} Hz: {line.amplitude:.3f} +- {line.amplitude_stderr:.3f}")

# a physical ensemble: a 2 % Gaussian spread of rf amplitude on the decoupled spins
system = SpinSystem.from_hz(120.0, 100.0, 1.0)
scales = np.linspace(0.94, 1.06, 25)
weights = np.exp(-0.5 * ((scales - 1) / 0.02) ** 2)
blurred = simulate_rf_ensemble(system, 1e3, 2e-4, zip(scales, weights / weights.sum()), 1000, blocks_per_sample=25)
for lo, hi in ((9, 11), (11, 13)):
    window = (blurred.frequencies >= lo) & (blurred.frequencies <= hi)
    k = np.argmax(blurred.values[window])
    print(f"blurred line in {lo}-{hi} Hz peaks at {blurred.frequencies[window][k]:.2f} Hz")
