"""CSV and JSON export of FIDs, spectra and result tables.

Floats are written with ``repr`` so that files are byte-for-byte
reproducible and JSON metadata round-trips exactly.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .acquisition import Fid, Spectrum

FORMAT_VERSION = 1


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if hasattr(obj, "value") and not isinstance(obj, (int, float, str)):
        return obj.value
    return obj


def dump_json(data, path) -> None:
    Path(path).write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


def fid_to_dict(fid: Fid) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "type": "fid",
        "dwell_s": fid.dwell,
        "theta": fid.theta,
        "metadata": fid.metadata,
        "samples": [float(x) for x in fid.samples],
    }


def fid_from_dict(data: dict) -> Fid:
    if data.get("type") != "fid":
        raise ValueError("not an FID document")
    return Fid(np.asarray(data["samples"], dtype=float), data["dwell_s"], data["theta"], data["metadata"])


def spectrum_to_dict(spec: Spectrum) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "type": "spectrum",
        "truncation_time_s": spec.truncation_time,
        "zero_fill_factor": spec.zero_fill_factor,
        "metadata": spec.metadata,
        "freq_hz": [float(f) for f in spec.frequencies],
        "re": [float(a.real) for a in spec.amplitudes],
        "im": [float(a.imag) for a in spec.amplitudes],
    }


def spectrum_from_dict(data: dict) -> Spectrum:
    if data.get("type") != "spectrum":
        raise ValueError("not a spectrum document")
    amps = np.asarray(data["re"]) + 1j * np.asarray(data["im"])
    return Spectrum(
        np.asarray(data["freq_hz"], dtype=float),
        amps,
        data["truncation_time_s"],
        data["zero_fill_factor"],
        data["metadata"],
    )


def write_table(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def read_table(path) -> tuple[list, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return header, np.asarray(rows, dtype=float)


def write_fid(fid: Fid, path, fmt: str = "csv") -> Path:
    path = Path(path)
    if fmt == "json":
        dump_json(fid_to_dict(fid), path)
    else:
        write_table(path, ["time_s", "signal"], zip(fid.times, fid.samples))
    return path


def write_spectrum(spec: Spectrum, path, fmt: str = "csv") -> Path:
    path = Path(path)
    if fmt == "json":
        dump_json(spectrum_to_dict(spec), path)
    else:
        amps = spec.amplitudes
        rows = zip(spec.frequencies, amps.real, amps.imag, np.abs(amps))
        write_table(path, ["freq_hz", "re", "im", "abs"], rows)
    return path


def read_fid(path) -> Fid:
    """Load an FID from JSON (with metadata) or CSV (``time_s, signal``)."""
    path = Path(path)
    if path.suffix == ".json":
        return fid_from_dict(json.loads(path.read_text()))
    header, data = read_table(path)
    if header[:2] != ["time_s", "signal"]:
        raise ValueError(f"{path}: expected columns time_s, signal")
    if len(data) < 2:
        dwell = 1.0
    else:
        dwell = float(data[1, 0] - data[0, 0])
    return Fid(data[:, 1].copy(), dwell, 0.0, {})


def read_spectrum(path) -> Spectrum:
    path = Path(path)
    if path.suffix == ".json":
        return spectrum_from_dict(json.loads(path.read_text()))
    header, data = read_table(path)
    if header[:3] != ["freq_hz", "re", "im"]:
        raise ValueError(f"{path}: expected columns freq_hz, re, im")
    df = data[1, 0] - data[0, 0] if len(data) > 1 else 1.0
    return Spectrum(data[:, 0].copy(), data[:, 1] + 1j * data[:, 2], 1.0 / (len(data) * df), 1, {})
