"""The decoupling block in action.

Repeating [dt,+A] pi_x [dt,+A] [dt,-A] pi_x [dt,-A] scales every chemical
shift by about theta/2 (theta = A dt) and the coupling by about theta^2/3,
so the doublets collapse into tall singlets that live much longer.
"""

from homodecouple import (
    SpinSystem,
    acquire,
    build_decoupling_block,
    envelope_lifetime,
    find_peaks,
    fit_envelope,
    spectrum,
)

system = SpinSystem.from_hz(120.0, 100.0, 1.0)
block = build_decoupling_block(system, a=1e3, dt=2e-4)
print(f"theta = {block.theta}, block duration = {block.total_duration * 1e3:.2f} ms")

# one sample every 25 blocks (20 ms); 100 s of decoupled evolution
fid = acquire(system, block, n_samples=5000, blocks_per_sample=25)
spec = spectrum(fid, truncate_at=20.0, zero_fill_factor=1)
for p in find_peaks(spec):
    print(f"scaled line at {p.frequency:.3f} Hz, height {p.height:.2f}")

free = acquire(system, None, n_samples=20000, dwell=1e-3)
free_spec = spectrum(free, truncate_at=20.0, zero_fill_factor=1)
print(f"tallest undecoupled line: {max(p.height for p in find_peaks(free_spec)):.2f}")

fit = fit_envelope(fid)
ratio = envelope_lifetime(fit.envelope_frequency) / envelope_lifetime(system.j)
print(f"J_eff = {fit.envelope_frequency:.5f} Hz, theta^2/3 J = {block.theta**2 / 3:.5f} Hz")
print(f"signal lives {ratio:.0f} times longer than without decoupling")
