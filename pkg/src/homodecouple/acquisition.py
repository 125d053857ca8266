"""Simulated acquisition: stroboscopic FIDs, spectra, envelope fits, peaks."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import signal
from scipy.optimize import least_squares

from .effham import unitary_eig
from .errors import EnvelopeFitError
from .sequence import PulseSequence, compile_sequence
from .spin import Ix, Sx, SpinSystem, hamiltonian, is_hermitian

DEFAULT_ZERO_FILL = 4


@dataclass(frozen=True)
class Fid:
    """Real signal ``s(t_k)``, ``t_k = k * dwell``, normalised to ``s(0) = 1``."""

    samples: np.ndarray
    dwell: float
    theta: float = 0.0
    metadata: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.samples)) * self.dwell

    @property
    def duration(self) -> float:
        return len(self.samples) * self.dwell


@dataclass(frozen=True)
class Spectrum:
    """Complex spectrum on an fftshifted Hz grid.

    Amplitudes are scaled by the dwell time so spectra from different
    sampling rates share one normalisation.
    """

    frequencies: np.ndarray
    amplitudes: np.ndarray
    truncation_time: float
    zero_fill_factor: int = 1
    metadata: dict = field(default_factory=dict)

    @property
    def resolution(self) -> float:
        return 1.0 / (self.zero_fill_factor * self.truncation_time)


@dataclass(frozen=True)
class Peak:
    frequency: float
    height: float
    width: float


class EnvelopeFit(NamedTuple):
    envelope_frequency: float
    fit_residual: float


def _stroboscopic(w: np.ndarray, rho0: np.ndarray, obs: np.ndarray, n: int) -> np.ndarray:
    """``Tr(W^k rho0 W^-k obs)`` for ``k < n`` from one eigendecomposition."""
    lam, z = unitary_eig(w)
    phases = np.angle(lam)
    rho = z.conj().T @ rho0 @ z
    o = z.conj().T @ obs @ z
    weights = rho * o.T
    k = np.arange(n)[:, None]
    dphi = (phases[:, None] - phases[None, :]).ravel()
    values = np.exp(1j * k * dphi[None, :]) @ weights.ravel()
    return values.real


def _expected_max_frequency(system: SpinSystem, seq: PulseSequence | None) -> float:
    f = (system.max_shift + np.pi * abs(system.j)) / (2 * np.pi)
    if seq is not None and seq.kind == "decouple":
        f *= abs(seq.theta) / 2
    return f


def acquire(
    system: SpinSystem,
    seq: PulseSequence | None,
    n_samples: int,
    blocks_per_sample: int = 1,
    dwell: float | None = None,
    rho0: np.ndarray | None = None,
    observable: np.ndarray | None = None,
) -> Fid:
    """Sample ``<Ix + Sx>`` stroboscopically.

    With a sequence, the compiled block is applied ``blocks_per_sample``
    times between samples and the dwell is that many block durations.  With
    ``seq=None`` the spins precess freely under the rotating-frame
    Hamiltonian and ``dwell`` must be given.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    rho0 = Ix + Sx if rho0 is None else np.asarray(rho0, dtype=complex)
    obs = Ix + Sx if observable is None else np.asarray(observable, dtype=complex)
    if not is_hermitian(rho0):
        raise ValueError("initial density operator must be Hermitian")

    if seq is None:
        if dwell is None or not dwell > 0:
            raise ValueError("free evolution needs a positive dwell")
        energies, vecs = np.linalg.eigh(hamiltonian(system))
        w = (vecs * np.exp(-1j * energies * dwell)) @ vecs.conj().T
        seq_meta = {"kind": "none"}
        theta = 0.0
    else:
        if seq.system != system:
            raise ValueError("sequence was built for a different spin system")
        if blocks_per_sample < 1:
            raise ValueError("blocks_per_sample must be at least 1")
        w = np.linalg.matrix_power(compile_sequence(seq), blocks_per_sample)
        dwell = blocks_per_sample * seq.total_duration
        seq_meta = {"kind": seq.kind, "theta": seq.theta, "block_duration_s": seq.total_duration}
        seq_meta.update({k: v for k, v in seq.params.items() if not isinstance(v, dict)})
        theta = seq.theta

    nyquist = 1 / (2 * dwell)
    f_max = _expected_max_frequency(system, seq)
    if f_max >= nyquist:
        warnings.warn(f"dwell {dwell:.3g} s undersamples the expected {f_max:.3g} Hz (Nyquist {nyquist:.3g} Hz)", stacklevel=2)

    values = _stroboscopic(w, rho0, obs, n_samples)
    s0 = np.trace(rho0 @ obs).real
    if abs(s0) < 1e-12:
        raise ValueError("initial signal is zero; cannot normalise")
    samples = values / s0
    samples[0] = 1.0
    metadata = {
        "system": system.to_dict(),
        "sequence": seq_meta,
        "blocks_per_sample": blocks_per_sample if seq is not None else None,
        "n_samples": n_samples,
        "dwell_s": dwell,
    }
    return Fid(samples, dwell, theta, metadata)


def spectrum(
    fid: Fid,
    truncate_at: float | None = None,
    zero_fill_factor: int = DEFAULT_ZERO_FILL,
    line_broadening: float = 0.0,
    rescale_axis: bool = False,
) -> Spectrum:
    """Fourier transform of the FID truncated at ``truncate_at`` seconds.

    ``line_broadening`` (Hz) applies ``exp(-pi lb t)`` apodisation; it is off
    by default and only emulates a finite linewidth.  ``rescale_axis``
    multiplies the frequency axis by ``2 / theta`` to read off unscaled
    chemical shifts.
    """
    if truncate_at is None:
        truncate_at = fid.duration
    if not truncate_at > 0:
        raise ValueError("truncate_at must be positive")
    n_keep = int(np.floor(truncate_at / fid.dwell + 1e-9))
    if n_keep > len(fid.samples):
        raise ValueError(f"truncate_at={truncate_at} exceeds the FID length {fid.duration}")
    n_keep = max(n_keep, 1)
    if zero_fill_factor < 1 or int(zero_fill_factor) != zero_fill_factor:
        raise ValueError("zero_fill_factor must be a positive integer")
    x = np.asarray(fid.samples[:n_keep], dtype=float)
    if line_broadening:
        x = x * np.exp(-np.pi * line_broadening * np.arange(n_keep) * fid.dwell)
    n_fft = int(zero_fill_factor) * n_keep
    amps = np.fft.fftshift(np.fft.fft(x, n_fft)) * fid.dwell
    freqs = np.fft.fftshift(np.fft.fftfreq(n_fft, fid.dwell))
    if rescale_axis:
        if not fid.theta:
            raise ValueError("axis rescaling needs a nonzero theta")
        freqs = freqs * 2 / fid.theta
    meta = dict(fid.metadata)
    meta.update({"line_broadening_hz": line_broadening, "rescaled_axis": rescale_axis})
    return Spectrum(freqs, amps, n_keep * fid.dwell, int(zero_fill_factor), meta)


def find_peaks(spec: Spectrum, threshold_fraction: float = 0.1) -> list[Peak]:
    """Positive-frequency maxima of ``|amplitude|`` above ``threshold_fraction``
    of the maximum, refined by three-point parabolic interpolation."""
    if not 0 < threshold_fraction < 1:
        raise ValueError("threshold_fraction must lie in (0, 1)")
    pos = spec.frequencies >= 0
    freqs = spec.frequencies[pos]
    mag = np.abs(spec.amplitudes[pos])
    if mag.size < 3 or mag.max() == 0:
        return []
    step = freqs[1] - freqs[0]
    idx, _ = signal.find_peaks(mag, height=threshold_fraction * mag.max())
    if idx.size == 0:
        return []
    widths = signal.peak_widths(mag, idx, rel_height=0.5)[0] * step
    peaks = []
    for i, width in zip(idx, widths):
        a, b, c = mag[i - 1], mag[i], mag[i + 1]
        denom = a - 2 * b + c
        delta = 0.5 * (a - c) / denom if denom else 0.0
        peaks.append(Peak(float(freqs[i] + delta * step), float(b - 0.25 * (a - c) * delta), float(width)))
    return peaks


def analytic_envelope(fid: Fid) -> np.ndarray:
    """``|s + i H[s]|`` via the Hilbert transform."""
    return np.abs(signal.hilbert(fid.samples))


def _envelope_design(t, j, beat, n_beats):
    slow = [np.ones_like(t), np.cos(2 * np.pi * j * t), np.sin(2 * np.pi * j * t)]
    cols = list(slow)
    if n_beats:
        for carrier in (np.cos(2 * np.pi * beat * t), np.sin(2 * np.pi * beat * t)):
            cols += [c * carrier for c in slow]
    return np.stack(cols, axis=1)


def _profile(t, y, j, beat, n_beats):
    design = _envelope_design(t, j, beat, n_beats)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return y - design @ coef


def _power_peaks(y, dwell, count=4):
    """Strongest spectral lines of ``y`` in Hz, parabolically refined."""
    ps = np.abs(np.fft.rfft(y - y.mean()))
    df = 1 / (len(y) * dwell)
    idx, _ = signal.find_peaks(ps)
    idx = idx[np.argsort(ps[idx])[::-1][:count]]
    out = []
    for i in idx:
        a, b, c = np.log(ps[i - 1 : i + 2] + 1e-300)
        denom = a - 2 * b + c
        out.append((i + (0.5 * (a - c) / denom if denom else 0.0)) * df)
    return sorted(out)


def fit_envelope(
    fid: Fid,
    model_frequency_count: int = 2,
    max_residual: float = 0.05,
    trim: float = 0.02,
) -> EnvelopeFit:
    """Fit a ``cos(pi J_eff t)`` envelope to the analytic-signal magnitude.

    Each of ``model_frequency_count`` carriers (1 or 2) is taken to be a
    doublet split by ``J_eff``; for equal doublet intensities its envelope is
    ``|cos(pi J_eff t)|``.  The squared analytic magnitude is then a linear
    combination of ``{1, cos, sin}(2 pi J_eff t)``, multiplied by
    ``{1, cos, sin}(2 pi f_b t)`` when a second carrier beats against the
    first at ``f_b``.  ``J_eff`` and ``f_b`` are found by variable
    projection; the carriers themselves are never needed.  Unequal doublet
    intensities (the envelope then does not reach zero) are absorbed by the
    free linear coefficients.  Edges (``trim`` of the record on each side) are
    dropped because the discrete Hilbert transform distorts them.

    Returns ``(J_eff in Hz, relative RMS residual)``; raises
    :class:`EnvelopeFitError` when the residual exceeds ``max_residual``.
    """
    if model_frequency_count not in (1, 2):
        raise ValueError("model_frequency_count must be 1 or 2")
    n_beats = model_frequency_count - 1
    power = analytic_envelope(fid) ** 2
    t = fid.times
    cut = int(trim * len(t))
    t, y = (t[cut : len(t) - cut], power[cut : len(power) - cut]) if cut else (t, power)
    if len(t) < 16:
        raise EnvelopeFitError("FID too short for an envelope fit")
    span = t[-1] - t[0]

    # spectral lines of the envelope power: 0, J, f_b, f_b +- J
    cand = _power_peaks(y, fid.dwell)
    beats = cand if n_beats else [0.0]
    low = np.arange(0, 4 / span, 0.05 / span)
    diffs = [abs(a - b) for a in cand for b in cand if a > b]
    j_cands = np.unique(np.concatenate([low, cand, diffs]))

    step = max(1, int(1 / (20 * (max(cand, default=0) + 4 / span) * fid.dwell)))
    ts, ys = t[::step], y[::step]
    trials = sorted(
        (np.sum(_profile(ts, ys, j, beat, n_beats) ** 2), j, beat) for beat in beats for j in j_cands
    )
    scale = np.sqrt(np.mean(y**2))
    best = None
    for _, j0, beat in trials[:3]:
        x0 = [j0, beat] if n_beats else [j0]

        def resid(p):
            return _profile(t, y, abs(p[0]), p[1] if n_beats else 0.0, n_beats) / scale

        fit = least_squares(resid, x0, x_scale=[1 / span] * len(x0), xtol=1e-14, ftol=1e-14, gtol=1e-14)
        rms = float(np.sqrt(np.mean(fit.fun**2)))
        if best is None or rms < best[1]:
            freqs = np.abs(fit.x)
            # the model is symmetric in (J, f_b); weak coupling puts the doublet splitting below the beat
            j_fit = float(freqs.min())
            best = (j_fit, rms, float(freqs.max()) if n_beats else 0.0)

    # an envelope indistinguishable from flat is reported as J_eff = 0
    flat = np.inf
    starts = {best[2], best[2] + best[0], abs(best[2] - best[0])} if n_beats else {0.0}
    for b0 in starts:
        fit = least_squares(
            lambda p: _profile(t, y, 0.0, p[0], n_beats) / scale, [b0], x_scale=[1 / span], xtol=1e-14, ftol=1e-14
        )
        flat = min(flat, float(np.sqrt(np.mean(fit.fun**2))))
    if flat <= best[1] * 1.01 + 1e-9:
        best = (0.0, float(flat), best[2])

    j_eff, rms, _ = best
    if rms > max_residual:
        raise EnvelopeFitError(
            f"envelope fit residual {rms:.3g} exceeds {max_residual} "
            f"(J_eff={j_eff:.4g} Hz, envelope lines {np.round(cand, 4).tolist()} Hz)"
        )
    return EnvelopeFit(j_eff, rms)


def envelope_lifetime(j_eff: float) -> float:
    """Time of the first envelope zero, ``1 / (2 J_eff)``."""
    return np.inf if j_eff == 0 else 1 / (2 * j_eff)
