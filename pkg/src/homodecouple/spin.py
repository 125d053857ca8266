"""Two coupled spin-1/2 particles: operators, Hamiltonians and propagators.

Operators are plain ``(4, 4)`` complex numpy arrays on C^2 (x) C^2, with
spin I on the first factor and spin S on the second.  Single-spin operators
use the normalisation ``I_b = (sigma_b / 2) (x) 1`` so that ``Tr(I_b^2) = 1``
and the rotating-frame Hamiltonian coefficients can be used verbatim::

    H = w_I I_z + w_S S_z + 2 pi J I_z S_z

Angular frequencies are in rad/s throughout; the coupling constant ``J`` is
carried in Hz and multiplied by 2 pi when the Hamiltonian is built.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

TwoSpinOperator = np.ndarray

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_ID2 = np.eye(2, dtype=complex)
AXES = ("x", "y", "z")


def _spin_i(axis: str) -> np.ndarray:
    return np.kron(_PAULI[axis] / 2, _ID2)


def _spin_s(axis: str) -> np.ndarray:
    return np.kron(_ID2, _PAULI[axis] / 2)


IDENTITY = np.eye(4, dtype=complex)
Ix, Iy, Iz = (_spin_i(a) for a in AXES)
Sx, Sy, Sz = (_spin_s(a) for a in AXES)
I_OPS = {"x": Ix, "y": Iy, "z": Iz}
S_OPS = {"x": Sx, "y": Sy, "z": Sz}


def product_basis() -> dict[str, np.ndarray]:
    """Return the 16 Hermitian product operators keyed by label.

    Order: ``1, Ix, Iy, Iz, Sx, Sy, Sz, 2IxSx, 2IxSy, 2IxSz, 2IySx, ...,
    2IzSz``.  The basis is orthogonal under ``Tr(A^dagger B)``; the two-spin
    products carry the conventional factor 2 so that ``Tr((2IzSz)^2) = 1``.
    """
    basis = {"1": IDENTITY.copy()}
    for a in AXES:
        basis[f"I{a}"] = I_OPS[a].copy()
    for a in AXES:
        basis[f"S{a}"] = S_OPS[a].copy()
    for a in AXES:
        for b in AXES:
            basis[f"2I{a}S{b}"] = 2 * I_OPS[a] @ S_OPS[b]
    return basis


_BASIS = product_basis()
BASIS_LABELS = tuple(_BASIS)
_BASIS_STACK = np.stack([_BASIS[k] for k in BASIS_LABELS])
_BASIS_NORMS = np.einsum("kij,kij->k", _BASIS_STACK.conj(), _BASIS_STACK).real


class Coupling(str, enum.Enum):
    ISING = "ising"
    ISOTROPIC = "isotropic"


@dataclass(frozen=True)
class SpinSystem:
    """Physical parameters of the coupled pair.

    Args:
        omega_i: chemical shift of spin I in rad/s.
        omega_s: chemical shift of spin S in rad/s.
        j: scalar coupling in Hz.
        coupling: ``Coupling.ISING`` keeps only ``2 pi J I_z S_z``;
            ``Coupling.ISOTROPIC`` uses the full ``2 pi J (I . S)``.
    """

    omega_i: float
    omega_s: float
    j: float
    coupling: Coupling = Coupling.ISING

    def __post_init__(self):
        object.__setattr__(self, "coupling", Coupling(self.coupling))
        for name in ("omega_i", "omega_s", "j"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")

    @classmethod
    def from_hz(cls, nu_i: float, nu_s: float, j: float, coupling=Coupling.ISING) -> "SpinSystem":
        return cls(2 * np.pi * nu_i, 2 * np.pi * nu_s, j, coupling)

    @property
    def weak_coupling_ratio(self) -> float:
        """``2 pi J / |w_I - w_S|`` (infinite for equal shifts)."""
        diff = abs(self.omega_i - self.omega_s)
        if diff == 0:
            return np.inf if self.j != 0 else 0.0
        return abs(2 * np.pi * self.j) / diff

    def is_weakly_coupled(self, threshold: float = 0.1) -> bool:
        """False when ``2 pi J > threshold * |w_I - w_S|``."""
        return self.weak_coupling_ratio <= threshold

    @property
    def max_shift(self) -> float:
        return max(abs(self.omega_i), abs(self.omega_s))

    def to_dict(self) -> dict:
        return {
            "omega_i_rad_s": self.omega_i,
            "omega_s_rad_s": self.omega_s,
            "j_hz": self.j,
            "coupling": self.coupling.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SpinSystem":
        return cls(data["omega_i_rad_s"], data["omega_s_rad_s"], data["j_hz"], data["coupling"])


@dataclass(frozen=True)
class ProductOperatorDecomposition:
    """Real coefficients of an operator in the product basis."""

    coefficients: dict = field(default_factory=dict)

    def __getitem__(self, label: str) -> float:
        return self.coefficients[label]

    def matrix(self) -> np.ndarray:
        return sum(c * _BASIS[k] for k, c in self.coefficients.items())

    def zeeman(self, spin: str) -> np.ndarray:
        """Field vector ``(c_x, c_y, c_z)`` acting on spin ``"I"`` or ``"S"``."""
        return np.array([self.coefficients[f"{spin}{a}"] for a in AXES])

    def coupling_tensor(self) -> np.ndarray:
        """3x3 tensor ``C[a, b]`` = coefficient of ``I_a S_b``."""
        return np.array([[2 * self.coefficients[f"2I{a}S{b}"] for b in AXES] for a in AXES])

    def term(self, label: str) -> float:
        """Coefficient of an unnormalised product such as ``"IzSz"``."""
        if len(label) == 4:
            return 2 * self.coefficients["2" + label]
        return self.coefficients[label]


def decompose(op: np.ndarray, *, check_hermitian: bool = True) -> ProductOperatorDecomposition:
    """Project ``op`` onto the product basis, ``c_k = Tr(B_k^dag op) / Tr(B_k^dag B_k)``."""
    op = np.asarray(op, dtype=complex)
    if check_hermitian:
        _require_hermitian(op, "operator")
    raw = np.einsum("kij,ij->k", _BASIS_STACK.conj(), op) / _BASIS_NORMS
    return ProductOperatorDecomposition(dict(zip(BASIS_LABELS, raw.real.tolist())))


def hermiticity_error(op: np.ndarray) -> float:
    return float(np.max(np.abs(op - op.conj().T)))


def unitarity_error(u: np.ndarray) -> float:
    return float(np.max(np.abs(u.conj().T @ u - IDENTITY)))


def is_hermitian(op: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    scale = max(1.0, float(np.max(np.abs(op))))
    return hermiticity_error(op) <= tol * scale


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    return unitarity_error(u) <= tol


def _require_hermitian(op, name):
    if op.shape != (4, 4):
        raise ValueError(f"{name} must be 4x4, got shape {op.shape}")
    if not is_hermitian(op):
        raise ValueError(f"{name} is not Hermitian (deviation {hermiticity_error(op):.3g})")


def _require_unitary(u, name):
    if u.shape != (4, 4):
        raise ValueError(f"{name} must be 4x4, got shape {u.shape}")
    if not is_unitary(u):
        raise ValueError(f"{name} is not unitary (deviation {unitarity_error(u):.3g})")


def hamiltonian(
    system: SpinSystem,
    rf_amplitude: float = 0.0,
    rf_phase: float = 0.0,
    shift_sign: int = 1,
    rf_sign: int = 1,
) -> np.ndarray:
    """Rotating-frame Hamiltonian of one piecewise-constant interval.

    ``shift_sign * (w_I I_z + w_S S_z) + coupling + rf_sign * A * (cos(phi)
    (I_x + S_x) + sin(phi) (I_y + S_y))``.  The four sign combinations
    ``(+, +), (-, +), (-, -), (+, -)`` give the four intervals of the
    decoupling cycle.
    """
    if shift_sign not in (1, -1) or rf_sign not in (1, -1):
        raise ValueError("shift_sign and rf_sign must be +1 or -1")
    two_pi_j = 2 * np.pi * system.j
    h = shift_sign * (system.omega_i * Iz + system.omega_s * Sz)
    if system.coupling is Coupling.ISING:
        h = h + two_pi_j * Iz @ Sz
    else:
        h = h + two_pi_j * (Ix @ Sx + Iy @ Sy + Iz @ Sz)
    if rf_amplitude:
        rf = np.cos(rf_phase) * (Ix + Sx) + np.sin(rf_phase) * (Iy + Sy)
        h = h + rf_sign * rf_amplitude * rf
    return h


def propagate(h: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i h t)`` for Hermitian ``h`` via eigendecomposition."""
    h = np.asarray(h, dtype=complex)
    _require_hermitian(h, "Hamiltonian")
    h = (h + h.conj().T) / 2
    energies, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(-1j * energies * t)) @ vecs.conj().T


def rotation(flip_angle: float, phase: float = 0.0) -> np.ndarray:
    """Non-selective hard pulse ``exp(-i flip (cos(phi) (Ix+Sx) + sin(phi) (Iy+Sy)))``."""
    c, s = np.cos(flip_angle / 2), np.sin(flip_angle / 2)
    axis = np.cos(phase) * _PAULI["x"] + np.sin(phase) * _PAULI["y"]
    single = c * _ID2 - 1j * s * axis
    return np.kron(single, single)


def evolve(rho: np.ndarray, u: np.ndarray) -> np.ndarray:
    """``U rho U^dagger``."""
    rho = np.asarray(rho, dtype=complex)
    u = np.asarray(u, dtype=complex)
    _require_unitary(u, "propagator")
    return u @ rho @ u.conj().T


def expect(rho: np.ndarray, obs: np.ndarray, tol: float = 1e-10) -> float:
    """``Tr(rho obs)``; raises if the imaginary part exceeds ``tol``."""
    value = np.trace(np.asarray(rho) @ np.asarray(obs))
    scale = max(1.0, abs(value))
    if abs(value.imag) > tol * scale:
        raise ValueError(f"expectation value has imaginary part {value.imag:.3g}; inputs not Hermitian")
    return float(value.real)


def phase_aligned_difference(u: np.ndarray, v: np.ndarray) -> float:
    """Max elementwise ``|e^{i phi} u - v|`` with the best global phase ``phi``."""
    overlap = np.trace(u.conj().T @ v)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.max(np.abs(phase * u - v)))
