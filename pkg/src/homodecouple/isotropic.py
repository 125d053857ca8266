"""Averaging an isotropic coupling to an Ising coupling with precession blocks.

Each block (see :func:`~homodecouple.sequence.build_isotropic_block`) ends
in a frame rotated by the central pi_x pulse.  Its effective Hamiltonian is
taken in the toggled frame and normalised by the net chemical-shift time
``dt = tau1 - tau2``; in that normalisation::

    H ~ wI Iz + wS Sz + ((tau1+tau2)/dt) 2piJ IzSz + A (Ix + Sx)
        + k1 (IxSx + IySy) + k2 (IxSy - IySx)

``k1`` and ``k2`` (the planar, flip-flop part) depend on the shift
difference and on the two delays.  A schedule of blocks with different
delays can suppress ``k1`` relative to the Ising term over a band of shift
differences; :func:`scan_isotropic_schedule` searches for one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import differential_evolution

from .effham import EffectiveHamiltonian, numeric_effective, principal_phases
from .sequence import PulseSequence, build_isotropic_block, compile_sequence
from .spin import Ix, Iy, Iz, Sx, Sy, Sz, SpinSystem, hamiltonian, rotation

_PI_X = rotation(np.pi)
_PLANAR = Ix @ Sx + Iy @ Sy
_TWIST = Ix @ Sy - Iy @ Sx
_ZZ = Iz @ Sz


def toggled_propagator(block: PulseSequence) -> np.ndarray:
    """Block propagator with the net pi_x frame rotation removed."""
    return _PI_X.conj().T @ compile_sequence(block)


def isotropic_effective(block: PulseSequence) -> EffectiveHamiltonian:
    """Toggled-frame effective Hamiltonian normalised by ``tau1 - tau2``."""
    return numeric_effective(toggled_propagator(block), block.params["delta_t_s"])


@dataclass(frozen=True)
class BlockCoefficients:
    zz: float
    kappa1: float
    kappa2: float

    @property
    def planar_ratio(self) -> float:
        """``|k1| / |zz|``: planar coupling left over per unit of Ising coupling."""
        return abs(self.kappa1) / abs(self.zz) if self.zz else np.inf


def block_coefficients(h: EffectiveHamiltonian) -> BlockCoefficients:
    zz = h.term("IzSz")
    kappa1 = (h.term("IxSx") + h.term("IySy")) / 2
    kappa2 = (h.term("IxSy") - h.term("IySx")) / 2
    return BlockCoefficients(zz, kappa1, kappa2)


def predicted_zz(tau1: float, tau2: float, j: float) -> float:
    return (tau1 + tau2) / (tau1 - tau2) * 2 * np.pi * j


def single_turn_taus(system: SpinSystem, delta_t: float) -> tuple[float, float]:
    """Delays for which the planar term makes one full turn at the nominal
    shift difference: ``tau1 + tau2 = 2 pi / |wI - wS|``."""
    diff = abs(system.omega_i - system.omega_s)
    if diff == 0:
        raise ValueError("equal chemical shifts: the planar coupling does not rotate")
    total = 2 * np.pi / diff
    if total <= delta_t:
        raise ValueError("delta_t longer than one planar turn")
    return (total + delta_t) / 2, (total - delta_t) / 2


def schedule_effective(
    system: SpinSystem,
    taus,
    theta_flip: float,
    flip_phase: float = 0.0,
) -> EffectiveHamiltonian:
    """Exact effective Hamiltonian of consecutive blocks, each taken in its
    toggled frame, normalised by the summed ``tau1 - tau2``."""
    u = np.eye(4, dtype=complex)
    total = 0.0
    for tau1, tau2 in taus:
        block = build_isotropic_block(system, tau1, tau2, theta_flip, flip_phase)
        u = toggled_propagator(block) @ u
        total += tau1 - tau2
    return numeric_effective(u, total)


def detuned(system: SpinSystem, diff: float) -> SpinSystem:
    """Same mean shift, shift difference ``diff``."""
    mean = (system.omega_i + system.omega_s) / 2
    return SpinSystem(mean + diff / 2, mean - diff / 2, system.j, system.coupling)


@dataclass(frozen=True)
class IsotropicSchedule:
    taus: tuple
    detunings: np.ndarray
    planar_ratio: float
    reference_taus: tuple
    reference_ratio: float

    @property
    def reduction(self) -> float:
        return self.reference_ratio / self.planar_ratio


class _BatchedBlocks:
    """Vectorised toggled-frame block propagators over a set of shift differences."""

    def __init__(self, systems, delta_t, theta_flip, flip_phase):
        hs = np.stack([hamiltonian(s) for s in systems])
        self.energies, self.vecs = np.linalg.eigh(hs)
        self.delta_t = delta_t
        self.pulse = _PI_X.conj().T @ rotation(theta_flip, flip_phase) @ _PI_X

    def _free(self, t):
        phase = np.exp(-1j * self.energies * t)
        return np.einsum("mij,mj,mkj->mik", self.vecs, phase, self.vecs.conj())

    def toggled(self, tau2):
        tau1 = tau2 + self.delta_t
        # P^dag R u2 P u1 with P^dag = P for two spins
        u2 = _PI_X @ self._free(tau2) @ _PI_X
        return self.pulse @ u2 @ self._free(tau1)

    def planar_ratio(self, tau2s):
        u = np.broadcast_to(np.eye(4, dtype=complex), self.energies.shape[:1] + (4, 4))
        for tau2 in tau2s:
            u = self.toggled(tau2) @ u
        lam, v = np.linalg.eig(u)
        phases, _ = principal_phases(np.angle(lam))
        energies = -phases / (len(tau2s) * self.delta_t)
        vinv = np.linalg.inv(v)

        def coeff(op):
            diag = np.einsum("mki,ij,mjk->mk", vinv, op, v)
            return (energies * diag).sum(axis=1).real / np.trace(op @ op).real

        return np.abs(coeff(_PLANAR)) / np.abs(coeff(_ZZ))


def scan_isotropic_schedule(
    system: SpinSystem,
    delta_t: float,
    theta_flip: float = 0.0,
    n_blocks: int = 3,
    detuning_range: tuple = (0.5, 1.5),
    n_detunings: int = 21,
    tau2_bounds: tuple | None = None,
    flip_phase: float = 0.0,
    seed: int = 0,
    maxiter: int = 150,
) -> IsotropicSchedule:
    """Search block delays minimising the worst planar-to-Ising ratio.

    The shift difference is swept over ``detuning_range`` times the nominal
    ``wI - wS`` of ``system``.  The reference is one block of a single planar
    turn at the nominal difference (:func:`single_turn_taus`).  The search is
    a seeded differential evolution over ``tau2`` of each block.
    """
    diff0 = system.omega_i - system.omega_s
    ref = single_turn_taus(system, delta_t)
    if tau2_bounds is None:
        tau2_bounds = (delta_t / 2, 1.5 * 2 * np.pi / abs(diff0))
    detunings = diff0 * np.linspace(detuning_range[0], detuning_range[1], n_detunings)
    batch = _BatchedBlocks([detuned(system, d) for d in detunings], delta_t, theta_flip, flip_phase)

    def worst(x):
        return float(np.max(batch.planar_ratio(np.sort(x))))

    result = differential_evolution(
        worst, [tau2_bounds] * n_blocks, seed=seed, maxiter=maxiter, tol=1e-10, polish=False
    )
    tau2s = np.sort(result.x)
    taus = tuple((float(t + delta_t), float(t)) for t in tau2s)
    return IsotropicSchedule(
        taus=taus,
        detunings=detunings,
        planar_ratio=worst(tau2s),
        reference_taus=ref,
        reference_ratio=float(np.max(batch.planar_ratio([ref[1]]))),
    )
