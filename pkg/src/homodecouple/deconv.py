"""Blurring of the scaled spectrum by rf inhomogeneity, and its inversion.

The decoupled spectrum places each line at ``(theta/2) w / 2pi`` with
``theta = A dt``.  A spread of rf amplitudes across the sample therefore
smears every line multiplicatively.  Locally the observed spectrum is
modelled as a sum of shifted copies of one point spread function plus
noise, ``Z(f) = sum_i X_i chi(f - f_i) + N(f)``, and the amplitudes ``X_i``
are recovered by least squares (non-negative by default).

Shift invariance only holds over a window narrow compared with the line
frequency; calibrate ``chi`` from an isolated line near the region of
interest.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .acquisition import acquire, spectrum
from .errors import DeconvolutionError
from .sequence import build_decoupling_block
from .spin import SpinSystem

MAX_CONDITION = 1e10


@dataclass(frozen=True)
class PointSpreadFunction:
    offsets: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0):
            raise ValueError("PSF weights must be non-negative")
        if abs(w.sum() - 1) > 1e-9:
            raise ValueError(f"PSF weights must sum to 1, got {w.sum()!r}")

    @classmethod
    def normalized(cls, offsets, weights) -> "PointSpreadFunction":
        w = np.clip(np.asarray(weights, dtype=float), 0, None)
        if w.sum() <= 0:
            raise ValueError("PSF has no positive weight")
        return cls(np.asarray(offsets, dtype=float), w / w.sum())

    def __call__(self, f) -> np.ndarray:
        """Linearly interpolated ``chi(f)``; zero outside the calibrated support."""
        return np.interp(f, self.offsets, self.weights, left=0.0, right=0.0)

    def second_moment(self) -> float:
        mean = np.sum(self.offsets * self.weights)
        return float(np.sum((self.offsets - mean) ** 2 * self.weights))


@dataclass(frozen=True)
class BlurredSpectrum:
    frequencies: np.ndarray
    values: np.ndarray
    noise_level: float = 0.0

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        if f.size > 2 and not np.allclose(np.diff(f), f[1] - f[0], rtol=1e-6, atol=0):
            raise ValueError("frequency grid must be uniform")


@dataclass(frozen=True)
class LineEstimate:
    frequency: float
    amplitude: float
    amplitude_stderr: float

    @property
    def significance(self) -> float:
        return self.amplitude / self.amplitude_stderr if self.amplitude_stderr > 0 else np.inf


@dataclass(frozen=True)
class DeconvolutionReport:
    lines: list
    condition_number: float
    residual_norm: float
    noise_estimate: float
    amplitudes: np.ndarray
    stderr: np.ndarray
    grid: np.ndarray

    def significant(self, nsigma: float = 3.0) -> list:
        return [line for line in self.lines if line.amplitude > nsigma * line.amplitude_stderr]


def estimate_noise(values: np.ndarray) -> float:
    """Robust white-noise sigma from the MAD of first differences."""
    d = np.diff(np.asarray(values, dtype=float))
    if d.size == 0:
        return 0.0
    return float(1.4826 * np.median(np.abs(d - np.median(d))) / np.sqrt(2))


def simulate_rf_ensemble(
    system: SpinSystem,
    a_nominal: float,
    dt: float,
    scale_distribution,
    n_samples: int,
    truncate_at: float | None = None,
    zero_fill_factor: int = 1,
    blocks_per_sample: int = 1,
    noise_sigma: float = 0.0,
    seed: int | None = None,
    max_workers: int | None = None,
) -> BlurredSpectrum:
    """Weighted sum of decoupled absorption spectra over rf amplitude scales.

    ``scale_distribution`` is a sequence of ``(scale, weight)`` pairs; each
    member is acquired with ``A -> scale * A``.  The real part of each
    spectrum is kept (positive frequencies only) so that the sum stays
    linear.  Optional white noise of ``noise_sigma`` is added with ``seed``.
    """
    pairs = [(float(s), float(w)) for s, w in scale_distribution]
    if not pairs:
        raise ValueError("empty scale distribution")
    scales, weights = map(np.asarray, zip(*pairs))
    if np.any(scales <= 0):
        raise ValueError("rf scales must be positive")
    if np.any(weights < 0) or abs(weights.sum() - 1) > 1e-9:
        raise ValueError("weights must be non-negative and sum to 1")

    def member(scale):
        block = build_decoupling_block(system, scale * a_nominal, dt)
        fid = acquire(system, block, n_samples, blocks_per_sample)
        return spectrum(fid, truncate_at, zero_fill_factor)

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        spectra = list(pool.map(member, scales))
    ref = spectra[0]
    pos = ref.frequencies >= 0
    total = sum(w * sp.amplitudes[pos].real for w, sp in zip(weights, spectra))
    if noise_sigma:
        total = total + np.random.default_rng(seed).normal(0.0, noise_sigma, total.shape)
    return BlurredSpectrum(ref.frequencies[pos], total, noise_sigma if noise_sigma else estimate_noise(total))


def calibrate_psf(spec: BlurredSpectrum, isolated_window: tuple, nsigma: float = 3.0) -> PointSpreadFunction:
    """Point spread function from the profile of one isolated line.

    The windowed profile is recentred so that its maximum sits at offset 0,
    negative values are clipped and the weights are normalised to unit sum.
    """
    lo, hi = isolated_window
    f = np.asarray(spec.frequencies)
    mask = (f >= lo) & (f <= hi)
    values = np.asarray(spec.values)[mask]
    if values.size == 0:
        raise ValueError("window contains no spectral points")
    noise = spec.noise_level if spec.noise_level else estimate_noise(spec.values)
    if values.max() <= nsigma * noise:
        raise ValueError(f"no sample in {isolated_window} Hz rises above {nsigma} x noise ({noise:.3g})")
    k = int(np.argmax(values))
    return PointSpreadFunction.normalized(f[mask] - f[mask][k], values)


def design_matrix(frequencies: np.ndarray, psf: PointSpreadFunction, grid: np.ndarray) -> np.ndarray:
    """Columns ``chi(f - g)`` for each candidate line position ``g``."""
    return psf(np.asarray(frequencies)[:, None] - np.asarray(grid)[None, :])


def deconvolve(
    z: BlurredSpectrum,
    psf: PointSpreadFunction,
    candidate_grid=None,
    nonnegative: bool = True,
) -> DeconvolutionReport:
    """Least-squares line amplitudes on ``candidate_grid`` (default: the
    spectrum's own bins).

    Standard errors are ``sigma * sqrt(diag((A^T A)^-1))`` over the full
    candidate design, with ``sigma^2`` the residual variance; for the
    non-negative solve this is the unconstrained covariance and so an upper
    bound.  Only nonzero amplitudes are returned as lines.
    """
    f = np.asarray(z.frequencies, dtype=float)
    y = np.asarray(z.values, dtype=float)
    grid = f.copy() if candidate_grid is None else np.asarray(candidate_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty candidate grid")
    if grid.min() < f.min() or grid.max() > f.max():
        raise ValueError("candidate grid extends beyond the spectrum support")
    a = design_matrix(f, psf, grid)
    u, sv, vt = np.linalg.svd(a, full_matrices=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    if cond > MAX_CONDITION or np.linalg.matrix_rank(a) < grid.size:
        raise DeconvolutionError(
            f"design matrix is rank deficient: condition number {cond:.3g}, "
            f"{np.linalg.matrix_rank(a)} independent columns of {grid.size}; use a coarser candidate grid"
        )
    if nonnegative:
        x, rnorm = nnls(a, y, maxiter=50 * grid.size)
    else:
        x = vt.T @ ((u.T @ y) / sv)
        rnorm = float(np.linalg.norm(y - a @ x))
    dof = max(y.size - np.count_nonzero(x), 1)
    sigma = rnorm / np.sqrt(dof)
    stderr = sigma * np.sqrt(np.sum((vt.T / sv) ** 2, axis=1))
    lines = [LineEstimate(float(g), float(xi), float(se)) for g, xi, se in zip(grid, x, stderr) if xi != 0]
    return DeconvolutionReport(lines, cond, float(rnorm), float(sigma), x, stderr, grid)
