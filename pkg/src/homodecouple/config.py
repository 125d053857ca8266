"""Experiment configuration files.

A configuration is one JSON document with ``"schema_version": 1``.  Every
dimensional key carries its unit as a suffix.  Chemical shifts are given in
Hz (``omega_i_hz`` is ``w_I / 2pi``); the rf amplitude is given either as
``a_rad_s`` or as ``a_hz`` (``A / 2pi``), never both.
"""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ConfigError
from .sequence import (
    build_constant_time_t1,
    build_decoupling_block,
    build_isotropic_block,
)
from .spin import Coupling, SpinSystem

SCHEMA_VERSION = 1

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_posint = {"type": "integer", "minimum": 1}

SCHEMA = {
    "type": "object",
    "required": ["schema_version", "system"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "description": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "system": {
            "type": "object",
            "required": ["omega_i_hz", "omega_s_hz", "j_hz"],
            "additionalProperties": False,
            "properties": {
                "omega_i_hz": _num,
                "omega_s_hz": _num,
                "j_hz": _num,
                "coupling": {"enum": ["ising", "isotropic"]},
            },
        },
        "sequence": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["none", "decouple", "isotropic", "constant_time"]},
                "a_rad_s": _num,
                "a_hz": _num,
                "delta_t_s": _pos,
                "tau1_s": _pos,
                "tau2_s": _pos,
                "theta_flip_rad": _num,
                "flip_phase_rad": _num,
                "d1_s": _nonneg,
                "d2_s": _nonneg,
            },
            "allOf": [
                {
                    "if": {"properties": {"kind": {"enum": ["decouple", "constant_time"]}}},
                    "then": {"required": ["delta_t_s"]},
                },
                {
                    "if": {"properties": {"kind": {"const": "isotropic"}}},
                    "then": {"required": ["tau1_s", "tau2_s", "theta_flip_rad"]},
                },
                {
                    "if": {"properties": {"kind": {"const": "constant_time"}}},
                    "then": {"required": ["d1_s", "d2_s"]},
                },
            ],
        },
        "acquisition": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_samples": _posint,
                "blocks_per_sample": _posint,
                "dwell_s": _pos,
                "truncate_at_s": _pos,
                "zero_fill": _posint,
                "line_broadening_hz": _nonneg,
                "threshold_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "rescale_axis": {"type": "boolean"},
            },
        },
        "analysis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"model_frequency_count": {"enum": [1, 2]}},
        },
        "sweep": {
            "type": "object",
            "required": ["parameter", "values"],
            "additionalProperties": False,
            "properties": {
                "parameter": {"enum": ["theta", "delta_t_s", "a_rad_s", "j_hz", "omega_i_hz", "omega_s_hz"]},
                "values": {"type": "array", "items": _num, "minItems": 1},
                "max_workers": _posint,
            },
        },
        "deconv": {
            "type": "object",
            "required": ["scales", "psf_window_hz"],
            "additionalProperties": False,
            "properties": {
                "scales": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
                },
                "noise_sigma": _nonneg,
                "psf_window_hz": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
                "grid_hz": {
                    "type": "object",
                    "required": ["start", "stop", "step"],
                    "additionalProperties": False,
                    "properties": {"start": _num, "stop": _num, "step": _pos},
                },
                "nonnegative": {"type": "boolean"},
                "nsigma": _pos,
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "directory": {"type": "string"},
                "formats": {"type": "array", "items": {"enum": ["csv", "json"]}, "minItems": 1},
            },
        },
    },
}


def _line_of(text: str, path) -> int | None:
    """Best-effort line number of the last key in a JSON path."""
    keys = [p for p in path if isinstance(p, str)]
    if not keys:
        return None
    needle = f'"{keys[-1]}"'
    for lineno, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return lineno
    return None


def parse_config(text: str, source: str = "<config>") -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    validator = jsonschema.Draft202012Validator(SCHEMA)
    found = [(list(e.absolute_path), e.message) for e in validator.iter_errors(data)]
    if not found:
        found = _amplitude_errors(data)
    if found:
        msgs = []
        for path, message in sorted(found, key=lambda e: [str(p) for p in e[0]]):
            where = "/".join(str(p) for p in path) or "<root>"
            line = _line_of(text, path)
            prefix = f"{source}:{line}" if line else source
            msgs.append(f"{prefix}: {where}: {message}")
        raise ConfigError("\n".join(msgs))
    return data


def _amplitude_errors(data: dict) -> list:
    """The rf amplitude must be given in exactly one unit when it is needed."""
    seq = data.get("sequence", {})
    given = [k for k in ("a_rad_s", "a_hz") if k in seq]
    if len(given) == 2:
        return [(["sequence", "a_hz"], "give the rf amplitude as a_rad_s or a_hz, not both")]
    if seq.get("kind") in ("decouple", "constant_time") and not given:
        return [(["sequence"], f"kind {seq['kind']!r} needs the rf amplitude as a_rad_s or a_hz")]
    return []


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, str(path))


def system_from_config(cfg: dict) -> SpinSystem:
    s = cfg["system"]
    return SpinSystem.from_hz(s["omega_i_hz"], s["omega_s_hz"], s["j_hz"], Coupling(s.get("coupling", "ising")))


def rf_amplitude(seq_cfg: dict) -> float:
    if "a_rad_s" in seq_cfg:
        return float(seq_cfg["a_rad_s"])
    return 2 * np.pi * float(seq_cfg["a_hz"])


def sequence_from_config(cfg: dict, system: SpinSystem | None = None):
    """Pulse sequence described by ``cfg["sequence"]`` (``None`` for free evolution)."""
    system = system or system_from_config(cfg)
    seq_cfg = cfg.get("sequence", {"kind": "none"})
    kind = seq_cfg["kind"]
    if kind == "none":
        return None
    if kind == "isotropic":
        return build_isotropic_block(
            system,
            seq_cfg["tau1_s"],
            seq_cfg["tau2_s"],
            seq_cfg["theta_flip_rad"],
            seq_cfg.get("flip_phase_rad", 0.0),
        )
    block = build_decoupling_block(system, rf_amplitude(seq_cfg), seq_cfg["delta_t_s"])
    if kind == "decouple":
        return block
    return build_constant_time_t1(block, seq_cfg["d1_s"], seq_cfg["d2_s"])
