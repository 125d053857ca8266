"""Effective Hamiltonians of the decoupling block, analytic and numeric.

``bch_effective`` evaluates the closed-form third-order expansion of one
block; ``numeric_effective`` takes the principal matrix logarithm of any
propagator.  ``tilt_analysis`` resolves the coupling along the tilted
effective Zeeman axis and keeps only the secular part.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import schur

from .errors import BranchCutError, RegimeError
from .spin import (
    Coupling,
    ProductOperatorDecomposition,
    SpinSystem,
    Iy,
    Iz,
    Sy,
    Sz,
    decompose,
    is_unitary,
    unitarity_error,
)

BRANCH_MARGIN = 1e-6
REGIME_LIMIT = 0.5
REGIME_WARN = 0.25


class Source(str, enum.Enum):
    ANALYTIC_BCH = "analytic_bch"
    NUMERIC_LOG = "numeric_log"


@dataclass(frozen=True)
class EffectiveHamiltonian:
    decomposition: ProductOperatorDecomposition
    generating_time: float
    source: Source

    def matrix(self) -> np.ndarray:
        return self.decomposition.matrix()

    def term(self, label: str) -> float:
        return self.decomposition.term(label)

    def propagator(self) -> np.ndarray:
        """``exp(-i T H_eff)``."""
        h = self.matrix()
        energies, vecs = np.linalg.eigh(h)
        return (vecs * np.exp(-1j * energies * self.generating_time)) @ vecs.conj().T

    def to_dict(self) -> dict:
        return {
            "source": self.source.value,
            "generating_time_s": self.generating_time,
            "coefficients_rad_s": dict(self.decomposition.coefficients),
        }


@dataclass(frozen=True)
class TiltAnalysis:
    """Secular picture in the frame of the tilted effective field.

    ``gamma`` is the angle between the effective field and the y axis.
    ``scaled_shift_i``/``scaled_shift_s`` are the per-spin field components
    along that axis and ``residual_coupling`` the coefficient of
    ``I_y' S_y'`` (all rad/s).  ``perpendicular_residue`` is the Frobenius
    norm of the coupling tensor that the truncation discards.
    """

    gamma: float
    scaled_shift_i: float
    scaled_shift_s: float
    residual_coupling: float
    perpendicular_residue: float

    def to_dict(self) -> dict:
        return {
            "gamma_rad": self.gamma,
            "scaled_shift_i_rad_s": self.scaled_shift_i,
            "scaled_shift_s_rad_s": self.scaled_shift_s,
            "residual_coupling_rad_s": self.residual_coupling,
            "perpendicular_residue_rad_s": self.perpendicular_residue,
        }


def regime_parameter(system: SpinSystem, a: float, dt: float) -> float:
    """``sqrt(A^2 + B^2) dt`` with ``B`` the larger chemical shift magnitude."""
    return float(np.hypot(a, system.max_shift) * dt)


def bch_effective(system: SpinSystem, a: float, dt: float) -> EffectiveHamiltonian:
    """Third-order effective Hamiltonian of one decoupling block (``T = 4 dt``).

    With ``theta = a * dt``::

        H = 2piJ IzSz - (theta/2)(wI Iy + wS Sy) + theta 2piJ (IySz + IzSy)
            + (theta^2/2)(wI Iz + wS Sz) + (4/3) theta^2 2piJ (IySy - IzSz)

    The Zeeman-derived terms carry the signs produced by the interval
    ordering of ``build_decoupling_block`` under ``U = exp(-i H t)``; with
    these signs the error against the exact block is fourth order in ``dt``.
    """
    if system.coupling is not Coupling.ISING:
        raise ValueError("the closed-form expansion assumes Ising coupling")
    x = regime_parameter(system, a, dt)
    if x >= REGIME_LIMIT:
        raise RegimeError(f"sqrt(A^2+B^2)*dt = {x:.3g} is not small (limit {REGIME_LIMIT})")
    if x > REGIME_WARN:
        warnings.warn(f"sqrt(A^2+B^2)*dt = {x:.3g}; third-order expansion is marginal", stacklevel=2)
    theta = a * dt
    two_pi_j = 2 * np.pi * system.j
    wi, ws = system.omega_i, system.omega_s
    h = (
        two_pi_j * Iz @ Sz
        - theta / 2 * (wi * Iy + ws * Sy)
        + theta * two_pi_j * (Iy @ Sz + Iz @ Sy)
        + theta**2 / 2 * (wi * Iz + ws * Sz)
        + 4 / 3 * theta**2 * two_pi_j * (Iy @ Sy - Iz @ Sz)
    )
    return EffectiveHamiltonian(decompose(h), 4 * dt, Source.ANALYTIC_BCH)


def unitary_eig(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and an orthonormal eigenbasis of a unitary matrix."""
    t, z = schur(u, output="complex")
    return np.diag(t).copy(), z


def principal_phases(phases: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unwrap eigenphases (last axis) into one interval and centre them on zero.

    The 2 pi cut is placed in the largest gap between neighbouring phases on
    the circle, which gives the traceless generator of smallest spread.
    Returns the centred phases and the margin by which the largest gap beats
    the runner-up; a zero margin means the cut (and so the logarithm) is
    ambiguous.
    """
    phases = np.asarray(phases, dtype=float)
    order = np.argsort(phases, axis=-1)
    s = np.take_along_axis(phases, order, axis=-1)
    wrapped = np.concatenate([s[..., 1:], s[..., :1] + 2 * np.pi], axis=-1)
    gaps = wrapped - s
    cut = np.argmax(gaps, axis=-1)[..., None]
    idx = np.arange(s.shape[-1])
    unwrapped = s + 2 * np.pi * ((idx <= cut) & (cut < s.shape[-1] - 1))
    unwrapped -= unwrapped.mean(axis=-1, keepdims=True)
    out = np.empty_like(unwrapped)
    np.put_along_axis(out, order, unwrapped, axis=-1)
    top2 = np.sort(gaps, axis=-1)[..., -2:]
    return out, top2[..., 1] - top2[..., 0]


def numeric_effective(u: np.ndarray, t: float) -> EffectiveHamiltonian:
    """``H_eff = (i/t) log U``, traceless, global phase removed.

    The logarithm is taken on the branch that minimises the eigenvalue
    spread of ``H_eff`` (see :func:`principal_phases`).  Raises
    :class:`BranchCutError` when that branch is ambiguous to within
    ``1e-6`` rad, i.e. when two eigenphase gaps on the circle tie.
    """
    if not t > 0:
        raise ValueError("generating time must be positive")
    u = np.asarray(u, dtype=complex)
    if not is_unitary(u):
        raise ValueError(f"matrix is not unitary (deviation {unitarity_error(u):.3g})")
    lam, vecs = unitary_eig(u)
    phases, margin = principal_phases(np.angle(lam))
    if margin < BRANCH_MARGIN:
        raise BranchCutError(
            f"eigenphases {np.round(np.angle(lam), 6).tolist()} sit on a branch cut "
            "(two equally valid logarithms); use a shorter generating time"
        )
    energies = -phases / t
    h = (vecs * energies) @ vecs.conj().T
    h = (h + h.conj().T) / 2
    return EffectiveHamiltonian(decompose(h), t, Source.NUMERIC_LOG)


def tilt_analysis(h: EffectiveHamiltonian) -> TiltAnalysis:
    """Secular coupling along the tilted effective Zeeman axis.

    The axis ``y'`` is the direction of the stronger per-spin field.  Each
    spin's own field direction (oriented along ``y'``) is used to project the
    coupling tensor; components that do not commute with the Zeeman field are
    dropped.  For the closed-form block Hamiltonian ``tan(gamma) = theta``.
    """
    dec = h.decomposition
    b_i, b_s = dec.zeeman("I"), dec.zeeman("S")
    norm_i, norm_s = np.linalg.norm(b_i), np.linalg.norm(b_s)
    if max(norm_i, norm_s) == 0:
        raise ValueError("effective Hamiltonian has no Zeeman field; tilt angle undefined")
    ref = b_i if norm_i >= norm_s else b_s
    axis = ref / np.linalg.norm(ref)
    n_i = _oriented(b_i, axis)
    n_s = _oriented(b_s, axis)
    gamma = float(np.arctan2(abs(axis[2]), abs(axis[1])))
    c = dec.coupling_tensor()
    residual = float(n_i @ c @ n_s)
    perp = float(np.linalg.norm(c - residual * np.outer(n_i, n_s)))
    return TiltAnalysis(gamma, float(b_i @ axis), float(b_s @ axis), residual, perp)


def _oriented(b, axis):
    norm = np.linalg.norm(b)
    if norm == 0:
        return axis
    n = b / norm
    return n if n @ axis >= 0 else -n
