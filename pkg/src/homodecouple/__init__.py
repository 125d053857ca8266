"""Broadband homonuclear decoupling of two coupled spin-1/2 nuclei.

Exact 4x4 simulation of pulse-sequence blocks, their analytic and numeric
effective Hamiltonians, simulated FIDs and spectra, and deconvolution of the
rf-inhomogeneity blur of the scaled spectrum.
"""

__version__ = "0.1.0"

from .errors import BranchCutError, ConfigError, DeconvolutionError, EnvelopeFitError, RegimeError
from .spin import (
    BASIS_LABELS,
    Coupling,
    ProductOperatorDecomposition,
    SpinSystem,
    decompose,
    hamiltonian,
    product_basis,
    propagate,
    rotation,
)
from .sequence import (
    InstantPulse,
    PulseSequence,
    Segment,
    build_constant_time_t1,
    build_decoupling_block,
    build_isotropic_block,
    compile_sequence,
)
from .effham import EffectiveHamiltonian, Source, TiltAnalysis, bch_effective, numeric_effective, tilt_analysis
from .acquisition import Fid, Peak, Spectrum, acquire, envelope_lifetime, find_peaks, fit_envelope, spectrum
from .isotropic import block_coefficients, isotropic_effective, scan_isotropic_schedule
from .deconv import (
    BlurredSpectrum,
    DeconvolutionReport,
    PointSpreadFunction,
    calibrate_psf,
    deconvolve,
    simulate_rf_ensemble,
)
