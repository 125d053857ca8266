"""End-to-end acceptance criteria.

Each test records one ``PASS``/``FAIL`` line (shown in the terminal summary
and printed when run with ``-s``) and then asserts.  Tolerances are the
pinned values; nothing here is loosened to make a result pass.
"""

import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homodecouple import (
    SpinSystem,
    acquire,
    bch_effective,
    build_constant_time_t1,
    build_decoupling_block,
    build_isotropic_block,
    compile_sequence,
    decompose,
    envelope_lifetime,
    find_peaks,
    fit_envelope,
    hamiltonian,
    numeric_effective,
    propagate,
    scan_isotropic_schedule,
    spectrum,
    tilt_analysis,
)
from homodecouple.acquisition import Fid
from homodecouple.deconv import BlurredSpectrum, PointSpreadFunction, deconvolve, design_matrix
from homodecouple.isotropic import block_coefficients, isotropic_effective, predicted_zz, single_turn_taus
from homodecouple.spin import Coupling, Ix, Sx, evolve, expect, is_hermitian, is_unitary, phase_aligned_difference

from conftest import ACCEPTANCE_LINES, decoupling_params, hermitian_4x4, spin_systems
from oracles import doublet_fid, toggled_product

pytestmark = pytest.mark.acceptance

NU_I, NU_S, J = 120.0, 100.0, 1.0
A = 1e3


def record(number: int, title: str, checks: dict) -> None:
    """``checks`` maps a short description to ``(passed, measured)``."""
    ok = all(passed for passed, _ in checks.values())
    detail = "; ".join(f"{name}: {measured}{'' if passed else ' [out of tolerance]'}" for name, (passed, measured) in checks.items())
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number:2d}  {title}  |  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def system():
    return SpinSystem.from_hz(NU_I, NU_S, J)


def strongest(spec, count):
    peaks = sorted(find_peaks(spec, 0.05), key=lambda p: -p.height)[:count]
    return sorted(peaks, key=lambda p: p.frequency)


# 1 ---------------------------------------------------------------------------


def test_criterion_01_doublet_spectrum(system):
    start = time.perf_counter()
    fid = acquire(system, None, 2000, dwell=1e-3)
    spec = spectrum(fid, truncate_at=2 / J, zero_fill_factor=1)
    peaks = find_peaks(spec)
    elapsed = time.perf_counter() - start
    half_bin = spec.resolution / 2
    expected = [99.5, 100.5, 119.5, 120.5]
    found = [p.frequency for p in peaks]
    positions_ok = len(found) == 4 and all(abs(f - e) <= half_bin for f, e in zip(found, expected))
    fid_err = float(np.max(np.abs(fid.samples - doublet_fid(fid.times, NU_I, NU_S, J))))
    record(
        1,
        "doublet spectrum",
        {
            "peaks (Hz)": (positions_ok, [round(f, 4) for f in found]),
            "max |FID - closed form|": (fid_err <= 1e-8, f"{fid_err:.1e}"),
            "runtime": (elapsed < 1.0, f"{elapsed:.3f} s"),
        },
    )


# 2 ---------------------------------------------------------------------------


def test_criterion_02_decoupled_envelope(system):
    start = time.perf_counter()
    block = build_decoupling_block(system, A, 2e-4)
    fid = acquire(system, block, 4000, 25)  # 1e5 blocks
    fit = fit_envelope(fid)
    elapsed = time.perf_counter() - start
    j_eff = fit.envelope_frequency
    ratio = envelope_lifetime(j_eff) / envelope_lifetime(J)
    record(
        2,
        "decoupled envelope",
        {
            "J_eff": (0.0113 <= j_eff <= 0.0153, f"{j_eff:.5f} Hz"),
            "lifetime ratio": (60 <= ratio <= 90, f"{ratio:.1f}"),
            "runtime": (elapsed < 30, f"{elapsed:.2f} s"),
        },
    )


# 3 ---------------------------------------------------------------------------


def test_criterion_03_scaled_shifts(system):
    theta = 0.2
    block = build_decoupling_block(system, A, theta / A)
    dec = spectrum(acquire(system, block, 1000, 25), truncate_at=20 / J, zero_fill_factor=1)
    free = spectrum(acquire(system, None, 20000, dwell=1e-3), truncate_at=20 / J, zero_fill_factor=1)
    bin_hz = dec.resolution
    lines = strongest(dec, 2)
    targets = [theta / 2 * NU_S, theta / 2 * NU_I]
    tallest_free = max(p.height for p in find_peaks(free))
    checks = {}
    for p, target in zip(lines, targets):
        checks[f"line near {target:g} Hz"] = (abs(p.frequency - target) <= bin_hz, f"{p.frequency:.4f} (bin {bin_hz:g})")
    checks["heights vs undecoupled"] = (
        len(lines) == 2 and all(p.height > tallest_free for p in lines),
        f"{[round(p.height, 3) for p in lines]} > {tallest_free:.3f}",
    )
    record(3, "scaled chemical shifts", checks)


# 4 ---------------------------------------------------------------------------


def test_criterion_04_bch_order(system):
    rng = np.random.default_rng(2024)
    ratios = []
    for _ in range(24):
        s = SpinSystem.from_hz(*rng.uniform(-150, 150, 2), rng.uniform(0.5, 5.0))
        a = rng.uniform(500, 3000)
        dt = rng.uniform(0.05, 0.2) / np.hypot(a, s.max_shift)
        errs = []
        for step in (dt, dt / 2):
            u = compile_sequence(build_decoupling_block(s, a, step))
            errs.append(phase_aligned_difference(u, bch_effective(s, a, step).propagator()))
        ratios.append(errs[0] / errs[1])
    ratios = np.array(ratios)
    record(
        4,
        "BCH order of accuracy",
        {"error ratio on halving dt": (bool(np.all((ratios >= 10) & (ratios <= 22))), f"{ratios.min():.2f}..{ratios.max():.2f} over {len(ratios)} sets")},
    )


# 5 ---------------------------------------------------------------------------


def test_criterion_05_scaling_laws(system):
    thetas = np.array([0.05, 0.1, 0.2])
    shift_dev, coupling_dev, residuals = [], [], []
    for theta in thetas:
        dt = theta / A
        tilt = tilt_analysis(numeric_effective(compile_sequence(build_decoupling_block(system, A, dt)), 4 * dt))
        for shift, omega in ((tilt.scaled_shift_i, system.omega_i), (tilt.scaled_shift_s, system.omega_s)):
            shift_dev.append(abs(abs(shift) / omega / (theta / 2) - 1))
        coupling_dev.append(abs(tilt.residual_coupling / (2 * np.pi * J) / (theta**2 / 3) - 1))
        residuals.append(abs(tilt.residual_coupling))
    slope = np.polyfit(np.log(thetas), np.log(residuals), 1)[0]
    record(
        5,
        "scaling-law sweep",
        {
            "y' Zeeman / w vs theta/2": (max(shift_dev) <= 0.02, f"max dev {max(shift_dev):.2%}"),
            "Iy'Sy' / 2piJ vs theta^2/3": (max(coupling_dev) <= 0.15, f"max dev {max(coupling_dev):.2%}"),
            "log-log slope": (abs(slope - 2) <= 0.1, f"{slope:.3f}"),
        },
    )


# 6 ---------------------------------------------------------------------------


def test_criterion_06_block_equivalence():
    worst = [0.0]
    count = [0]

    @settings(max_examples=200)
    @given(decoupling_params())
    def check(params):
        system, a, dt = params
        diff = phase_aligned_difference(compile_sequence(build_decoupling_block(system, a, dt)), toggled_product(system, a, dt))
        worst[0] = max(worst[0], diff)
        count[0] += 1
        assert diff <= 1e-10

    try:
        check()
        passed = True
    except AssertionError:
        passed = False
    record(6, "block equivalence", {"max |U_block - U_product| (phase aligned)": (passed and worst[0] <= 1e-10, f"{worst[0]:.1e} over {count[0]} cases")})


# 7 ---------------------------------------------------------------------------


def test_criterion_07_isotropic_averaging():
    system = SpinSystem.from_hz(NU_I, NU_S, J, Coupling.ISOTROPIC)
    assert system.weak_coupling_ratio <= 0.05 + 1e-12
    delta_t = 1e-3
    schedule = scan_isotropic_schedule(system, delta_t, theta_flip=0.05, n_blocks=3, detuning_range=(0.5, 1.5))
    zz_dev = []
    for tau1, tau2 in (single_turn_taus(system, delta_t),) + schedule.taus:
        c = block_coefficients(isotropic_effective(build_isotropic_block(system, tau1, tau2, 0.05)))
        zz_dev.append(abs(c.zz / predicted_zz(tau1, tau2, J) - 1))
    record(
        7,
        "isotropic averaging",
        {
            "IzSz vs (tau1+tau2)-scaled prediction": (max(zz_dev) <= 0.05, f"max dev {max(zz_dev):.2%}"),
            "worst |k1|/|zz| over +-50%": (schedule.reduction >= 10, f"{schedule.reference_ratio:.3f} -> {schedule.planar_ratio:.4f} ({schedule.reduction:.0f}x)"),
        },
    )


# 8 ---------------------------------------------------------------------------


def test_criterion_08_constant_time(system):
    theta = 0.2
    block = build_decoupling_block(system, A, theta / A)
    tb = block.total_duration
    step = 10 * tb  # d1 - d2 advances by 2 * step
    targets = [theta / 2 * NU_S, theta / 2 * NU_I]
    checks = {}
    for total in (2.0, 4.0):
        signal = []
        for m in range(int(round(total / step))):
            u = compile_sequence(build_constant_time_t1(block, m * step, total - m * step))
            signal.append(expect(evolve(Ix + Sx, u), Ix + Sx) / 2)
        spec = spectrum(Fid(np.array(signal), 2 * step), zero_fill_factor=1)
        lines = strongest(spec, 2)
        ok = len(lines) == 2 and all(abs(p.frequency - t) <= spec.resolution for p, t in zip(lines, targets))
        checks[f"d1+d2={total:g} s"] = (ok, f"{[round(p.frequency, 3) for p in lines]} Hz (bin {spec.resolution:g})")
    record(8, "constant-time t1", checks)


# 9 ---------------------------------------------------------------------------


def test_criterion_09_deconvolution():
    df = 0.05
    f = np.arange(0, 20 + df / 2, df)
    offsets = np.arange(-0.5, 0.5 + df / 2, df)
    psf = PointSpreadFunction.normalized(offsets, np.exp(-0.5 * (offsets / 0.1) ** 2))
    grid = np.round(np.arange(1.0, 19.0 + 1e-9, 0.2), 10)
    truth = np.zeros_like(grid)
    truth[grid == 10.0], truth[grid == 12.0] = 1.0, 0.8
    a = design_matrix(f, psf, grid)
    clean = a @ truth
    sigma = clean.max() / 100  # SNR 100

    positions_ok, amp_err = True, 0.0
    for seed in range(20):
        z = BlurredSpectrum(f, clean + np.random.default_rng(seed).normal(0, sigma, f.size), sigma)
        report = deconvolve(z, psf, grid)
        top = np.sort(grid[np.argsort(report.amplitudes)[-2:]])
        positions_ok &= bool(np.array_equal(top, [10.0, 12.0]))
        for g, x in ((10.0, 1.0), (12.0, 0.8)):
            amp_err = max(amp_err, abs(report.amplitudes[grid == g][0] / x - 1))

    clean_runs = 0
    for seed in range(100):
        z = BlurredSpectrum(f, np.random.default_rng(1000 + seed).normal(0, sigma, f.size), sigma)
        clean_runs += not deconvolve(z, psf, grid).significant(3.0)
    record(
        9,
        "deconvolution recovery",
        {
            "positions exact (20 seeds)": (positions_ok, "exact" if positions_ok else "misplaced"),
            "amplitude error": (amp_err <= 0.05, f"max {amp_err:.2%}"),
            "noise-only clean": (clean_runs >= 95, f"{clean_runs}/100 seeds"),
        },
    )


# 10 --------------------------------------------------------------------------


def test_criterion_10_core_invariants():
    counts = dict.fromkeys(["unitarity", "trace preservation", "hermiticity", "Parseval", "decomposition round-trip"], 0)

    @settings(max_examples=100, database=None)
    @given(spin_systems(), st.floats(0, 5000), st.floats(0, 0.01))
    def unitarity(system, a, t):
        counts["unitarity"] += 1
        assert is_unitary(propagate(hamiltonian(system, a), t))

    @settings(max_examples=100, database=None)
    @given(hermitian_4x4(), decoupling_params())
    def trace_preservation(rho, params):
        counts["trace preservation"] += 1
        u = compile_sequence(build_decoupling_block(*params))
        assert abs(np.trace(evolve(rho, u)) - np.trace(rho)) < 1e-10

    @settings(max_examples=100, database=None)
    @given(decoupling_params())
    def hermiticity(params):
        counts["hermiticity"] += 1
        system, a, dt = params
        assert is_hermitian(hamiltonian(system, a))
        h = numeric_effective(compile_sequence(build_decoupling_block(system, a, dt)), 4 * dt).matrix()
        assert is_hermitian(h)

    @settings(max_examples=100, database=None)
    @given(st.lists(st.floats(-1, 1), min_size=1, max_size=128), st.floats(1e-4, 1e-1), st.integers(1, 4))
    def parseval(samples, dwell, zf):
        counts["Parseval"] += 1
        spec = spectrum(Fid(np.array(samples), dwell), zero_fill_factor=zf)
        df = 1 / (len(spec.frequencies) * dwell)
        energy = np.sum(np.square(samples)) * dwell
        assert abs(np.sum(np.abs(spec.amplitudes) ** 2) * df - energy) <= 1e-9 * max(energy, 1e-3)

    @settings(max_examples=100, database=None)
    @given(hermitian_4x4(scale=100.0))
    def round_trip(h):
        counts["decomposition round-trip"] += 1
        assert np.max(np.abs(decompose(h).matrix() - h)) < 1e-10

    start = time.perf_counter()
    failures = []
    for fn in (unitarity, trace_preservation, hermiticity, parseval, round_trip):
        try:
            fn()
        except AssertionError as exc:
            failures.append(f"{fn.__name__}: {exc}")
    elapsed = time.perf_counter() - start
    checks = {name: (n >= 100, f"{n} cases") for name, n in counts.items()}
    checks["all properties hold"] = (not failures, "yes" if not failures else failures)
    checks["runtime"] = (elapsed < 60, f"{elapsed:.1f} s")
    record(10, "core invariants", checks)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
