"""Constant-time indirect evolution.

Decoupled evolution for d1, a pi_x, decoupled evolution for d2.  With
d1 + d2 fixed, the chemical shift phase depends only on d1 - d2, so
stepping d1 - d2 traces out a scaled spectrum in the indirect dimension.
"""

import numpy as np

from homodecouple import SpinSystem, build_constant_time_t1, build_decoupling_block, compile_sequence
from homodecouple.spin import Ix, Sx, evolve, expect

system = SpinSystem.from_hz(120.0, 100.0, 1.0)
block = build_decoupling_block(system, 1e3, 2e-4)
tb = block.total_duration
rho0 = Ix + Sx
step = 10 * tb  # d1 - d2 advances by 2 * step per increment

for total in (2.0, 4.0):
    n_total = round(total / tb)
    signal = []
    for k in range(int(total / (2 * step))):
        n1 = n_total // 2 + k * 10
        n2 = n_total - n1
        u = compile_sequence(build_constant_time_t1(block, n1 * tb, n2 * tb))
        signal.append(expect(evolve(rho0, u), Ix + Sx) / expect(rho0, Ix + Sx))
    spec = np.abs(np.fft.rfft(signal))
    freqs = np.fft.rfftfreq(len(signal), 2 * step)
    top = np.sort(freqs[np.argsort(spec)[-2:]])
    print(f"d1 + d2 = {total} s: strongest indirect lines at {top} Hz (bin {freqs[1]:.3f} Hz)")
