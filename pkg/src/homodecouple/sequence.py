"""Pulse sequences as ordered piecewise-constant segments and hard pulses.

A :class:`PulseSequence` carries the spin system it acts on, so that
:func:`compile_sequence` can turn it into a single 4x4 propagator.  Elements
are applied left to right in time.  A sequence may itself appear as an element
of another sequence; this keeps long stroboscopic experiments (thousands of
repeated blocks) cheap to compile.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import RegimeError
from .spin import Coupling, SpinSystem, hamiltonian, propagate, rotation

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Segment:
    """Free evolution under a constant Hamiltonian.

    ``shift_sign`` is the sign of the Zeeman terms as realised in the lab; the
    builders here always use +1 and obtain inverted shifts with hard pulses.
    """

    duration: float
    shift_sign: int = 1
    rf_amplitude: float = 0.0
    rf_phase: float = 0.0
    rf_sign: int = 1

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError(f"segment duration must be positive, got {self.duration!r}")
        if self.shift_sign not in (1, -1) or self.rf_sign not in (1, -1):
            raise ValueError("shift_sign and rf_sign must be +1 or -1")

    def propagator(self, system: SpinSystem) -> np.ndarray:
        h = hamiltonian(system, self.rf_amplitude, self.rf_phase, self.shift_sign, self.rf_sign)
        return propagate(h, self.duration)


@dataclass(frozen=True)
class InstantPulse:
    """Zero-duration non-selective rotation of both spins."""

    flip_angle: float
    phase: float = 0.0

    def propagator(self, system: SpinSystem = None) -> np.ndarray:
        return rotation(self.flip_angle, self.phase)


Element = Union[Segment, InstantPulse, "PulseSequence"]


@dataclass(frozen=True)
class PulseSequence:
    system: SpinSystem
    elements: tuple = ()
    repetitions: int = 1
    kind: str = "custom"
    theta: float = 0.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if int(self.repetitions) != self.repetitions or self.repetitions < 0:
            raise ValueError("repetitions must be a non-negative integer")
        for el in self.elements:
            if isinstance(el, PulseSequence) and el.system != self.system:
                raise ValueError("nested sequence acts on a different spin system")

    @property
    def block_duration(self) -> float:
        """Summed segment time of one repetition."""
        total = 0.0
        for el in self.elements:
            if isinstance(el, Segment):
                total += el.duration
            elif isinstance(el, PulseSequence):
                total += el.total_duration
        return total

    @property
    def total_duration(self) -> float:
        return self.block_duration * self.repetitions

    def repeated(self, n: int) -> "PulseSequence":
        return PulseSequence(self.system, self.elements, n, self.kind, self.theta, dict(self.params))

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "system": self.system.to_dict(),
            "repetitions": self.repetitions,
            "theta": self.theta,
            "params": dict(self.params),
            "block_duration_s": self.block_duration,
            "elements": [_element_to_dict(el) for el in self.elements],
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, data: dict) -> "PulseSequence":
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported sequence schema_version {data.get('schema_version')!r}")
        system = SpinSystem.from_dict(data["system"])
        return cls(
            system,
            tuple(_element_from_dict(e, system) for e in data["elements"]),
            data["repetitions"],
            data["kind"],
            data["theta"],
            dict(data["params"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "PulseSequence":
        return cls.from_dict(json.loads(text))


def _element_to_dict(el) -> dict:
    if isinstance(el, Segment):
        return {
            "type": "segment",
            "duration_s": el.duration,
            "shift_sign": el.shift_sign,
            "rf_amplitude_rad_s": el.rf_amplitude,
            "rf_phase_rad": el.rf_phase,
            "rf_sign": el.rf_sign,
        }
    if isinstance(el, InstantPulse):
        return {"type": "pulse", "flip_angle_rad": el.flip_angle, "phase_rad": el.phase}
    d = el.to_dict()
    d["type"] = "sequence"
    return d


def _element_from_dict(d: dict, system: SpinSystem):
    kind = d["type"]
    if kind == "segment":
        return Segment(d["duration_s"], d["shift_sign"], d["rf_amplitude_rad_s"], d["rf_phase_rad"], d["rf_sign"])
    if kind == "pulse":
        return InstantPulse(d["flip_angle_rad"], d["phase_rad"])
    if kind == "sequence":
        return PulseSequence.from_dict({k: v for k, v in d.items() if k != "type"})
    raise ValueError(f"unknown element type {kind!r}")


def hard_pi(phase: float = 0.0) -> InstantPulse:
    return InstantPulse(np.pi, phase)


def build_decoupling_block(system: SpinSystem, a: float, dt: float) -> PulseSequence:
    """One building block of the broadband decoupling sequence.

    Four intervals of length ``dt`` with rf amplitude ``a`` and signs
    ``(+, +, -, -)``.  Hard pi_x pulses after the first and after the third
    interval make the chemical shift appear with signs ``(+, -, -, +)`` in the
    toggling frame, while the Ising coupling is left untouched::

        [dt, +A] pi_x [dt, +A] [dt, -A] pi_x [dt, -A]

    Because two pi_x pulses square to the identity on two spins, the block
    propagator equals the product of ``exp(-i H_k dt)`` over the four ideal
    interval Hamiltonians up to a global phase.  ``theta = a * dt``.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    theta = a * dt
    if abs(theta) >= np.pi / 2:
        raise RegimeError(f"flip per interval a*dt = {theta:.4g} rad must stay below pi/2")
    pi_x = hard_pi()
    elements = (
        Segment(dt, 1, a, 0.0, 1),
        pi_x,
        Segment(dt, 1, a, 0.0, 1),
        Segment(dt, 1, a, 0.0, -1),
        pi_x,
        Segment(dt, 1, a, 0.0, -1),
    )
    return PulseSequence(system, elements, 1, "decouple", theta, {"a_rad_s": a, "delta_t_s": dt})


def build_isotropic_block(
    system: SpinSystem,
    tau1: float,
    tau2: float,
    theta_flip: float,
    flip_phase: float = 0.0,
) -> PulseSequence:
    """Free precession ``tau1``, pi_x, free precession ``tau2``, then a hard
    pulse of ``theta_flip`` about the axis at ``flip_phase``.

    The net chemical-shift evolution is ``tau1 - tau2`` (the pi pulse inverts
    it), while the Ising part of the coupling acts for ``tau1 + tau2``.  The
    block leaves the spins in a frame rotated by pi_x; see
    :func:`homodecouple.isotropic.toggled_propagator`.
    """
    if not tau2 > 0 or not tau1 > tau2:
        raise ValueError(f"need tau1 > tau2 > 0, got tau1={tau1!r}, tau2={tau2!r}")
    if system.coupling is not Coupling.ISOTROPIC:
        raise ValueError("isotropic block expects a system with isotropic coupling")
    elements = (Segment(tau1), hard_pi(), Segment(tau2), InstantPulse(theta_flip, flip_phase))
    params = {"tau1_s": tau1, "tau2_s": tau2, "delta_t_s": tau1 - tau2, "flip_phase_rad": flip_phase}
    return PulseSequence(system, elements, 1, "isotropic", theta_flip, params)


def blocks_for(duration: float, block_duration: float, name: str = "duration") -> int:
    """Whole number of blocks spanning ``duration``; raises if it does not divide."""
    n = int(round(duration / block_duration))
    if n < 0 or abs(n * block_duration - duration) > 1e-9 * max(1.0, duration):
        raise ValueError(f"{name}={duration!r} is not a whole number of blocks of {block_duration!r} s")
    return n


def build_constant_time_t1(block: PulseSequence, d1: float, d2: float) -> PulseSequence:
    """Decoupled evolution for ``d1``, hard pi_x, decoupled evolution for ``d2``.

    ``d1`` and ``d2`` must be whole multiples of the block duration.  The net
    chemical-shift phase depends on ``d1 - d2`` only; the residual coupling
    acts for the constant time ``d1 + d2``.
    """
    if d1 < 0 or d2 < 0:
        raise ValueError("d1 and d2 must be non-negative")
    tb = block.total_duration
    n1 = blocks_for(d1, tb, "d1")
    n2 = blocks_for(d2, tb, "d2")
    elements = (block.repeated(block.repetitions * n1), hard_pi(), block.repeated(block.repetitions * n2))
    params = {"d1_s": d1, "d2_s": d2, "block": block.to_dict()}
    return PulseSequence(block.system, elements, 1, "constant_time", block.theta, params)


def compile_sequence(seq: PulseSequence) -> np.ndarray:
    """Total propagator of ``seq`` (later elements multiply from the left)."""
    u = np.eye(4, dtype=complex)
    cache = {}
    for el in seq.elements:
        if isinstance(el, PulseSequence):
            step = compile_sequence(el)
        else:
            step = cache.get(el)
            if step is None:
                step = cache[el] = el.propagator(seq.system)
        u = step @ u
    if seq.repetitions != 1:
        u = np.linalg.matrix_power(u, int(seq.repetitions))
    return u
