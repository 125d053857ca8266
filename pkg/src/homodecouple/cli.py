"""Command-line entry point: ``homodecouple <subcommand> [options]``.

Subcommands read a JSON experiment configuration (see
:mod:`homodecouple.config`) and write plot-ready CSV or JSON files into the
output directory.  Exit codes: 0 success, 2 configuration error, 3 numeric
regime error, 4 fit or solver failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .acquisition import acquire, envelope_lifetime, find_peaks, fit_envelope, spectrum
from .config import load_config, rf_amplitude, sequence_from_config, system_from_config
from .deconv import calibrate_psf, deconvolve, simulate_rf_ensemble
from .effham import bch_effective, numeric_effective, tilt_analysis
from .errors import ConfigError, DeconvolutionError, EnvelopeFitError, RegimeError
from .io import dump_json, read_fid, write_fid, write_spectrum, write_table
from .sequence import build_decoupling_block, compile_sequence
from .spin import BASIS_LABELS, SpinSystem, phase_aligned_difference

EXIT_OK, EXIT_CONFIG, EXIT_REGIME, EXIT_FIT = 0, 2, 3, 4


def _formats(args, cfg) -> list[str]:
    if args.format:
        return [args.format]
    return list((cfg or {}).get("output", {}).get("formats", ["csv"]))


def _out_dir(args, cfg) -> Path:
    out = args.out or (cfg or {}).get("output", {}).get("directory") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _seed(args, cfg) -> int:
    return args.seed if args.seed is not None else int((cfg or {}).get("seed", 0))


def _require_config(args) -> dict:
    if not args.config:
        raise ConfigError(f"{args.command}: --config PATH is required")
    return load_config(args.config)


def _echo(msg: str) -> None:
    print(msg, flush=True)


# --- simulate -----------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = _require_config(args)
    system = system_from_config(cfg)
    seq = sequence_from_config(cfg, system)
    acq = cfg.get("acquisition", {})
    if "n_samples" not in acq:
        raise ConfigError(f"{args.config}: acquisition/n_samples is required for simulate")
    if seq is None and "dwell_s" not in acq:
        raise ConfigError(f"{args.config}: acquisition/dwell_s is required without a sequence")
    fid = acquire(system, seq, acq["n_samples"], acq.get("blocks_per_sample", 1), dwell=acq.get("dwell_s"))
    out = _out_dir(args, cfg)
    for fmt in _formats(args, cfg):
        write_fid(fid, out / f"fid.{fmt}", fmt)
    report = {
        "seed": _seed(args, cfg),
        "theta": fid.theta,
        "block_duration_s": seq.total_duration if seq is not None else None,
        "dwell_s": fid.dwell,
        "nyquist_hz": 1 / (2 * fid.dwell),
        "n_samples": len(fid.samples),
        "duration_s": fid.duration,
        "weakly_coupled": system.is_weakly_coupled(),
    }
    if seq is not None:
        (out / "sequence.json").write_text(seq.to_json() + "\n")
    dump_json(report, out / "simulate.json")
    _echo(f"theta = {fid.theta:.6g}")
    if seq is None:
        _echo("free evolution (no pulse sequence)")
    else:
        _echo(f"block duration = {seq.total_duration:.6g} s")
    _echo(f"dwell = {fid.dwell:.6g} s, Nyquist = {report['nyquist_hz']:.6g} Hz, {len(fid.samples)} samples")
    if not report["weakly_coupled"]:
        _echo("warning: 2piJ / |wI - wS| exceeds 0.1; the Ising form of the coupling is questionable")
    return EXIT_OK


# --- spectrum -----------------------------------------------------------------


def cmd_spectrum(args) -> int:
    cfg = load_config(args.config) if args.config else None
    acq = (cfg or {}).get("acquisition", {})
    if not args.fid:
        raise ConfigError("spectrum: --fid PATH is required")
    fid = read_fid(args.fid)
    truncate_at = args.truncate_at if args.truncate_at is not None else acq.get("truncate_at_s")
    zero_fill = args.zero_fill if args.zero_fill is not None else acq.get("zero_fill", 1)
    spec = spectrum(
        fid,
        truncate_at,
        zero_fill,
        acq.get("line_broadening_hz", 0.0),
        acq.get("rescale_axis", False),
    )
    out = _out_dir(args, cfg)
    fmts = _formats(args, cfg)
    for fmt in fmts:
        write_spectrum(spec, out / f"spectrum.{fmt}", fmt)
    peaks = find_peaks(spec, acq.get("threshold_fraction", 0.1))
    _write_records(out / "peaks", [dataclasses.asdict(p) for p in peaks], ["frequency", "height", "width"], fmts)
    _echo(f"resolution = {spec.resolution:.6g} Hz, {len(peaks)} peaks")
    for p in peaks:
        _echo(f"  {p.frequency:.6f} Hz  height {p.height:.6g}")
    return EXIT_OK


def _write_records(stem: Path, records: list[dict], columns: list[str], fmts) -> None:
    for fmt in fmts:
        if fmt == "json":
            dump_json(records, stem.with_suffix(".json"))
        else:
            write_table(stem.with_suffix(".csv"), columns, ([r[c] for c in columns] for r in records))


# --- analyze ------------------------------------------------------------------


def _decoupling_report(system: SpinSystem, a: float, dt: float) -> dict:
    block = build_decoupling_block(system, a, dt)
    h = numeric_effective(compile_sequence(block), 4 * dt)
    tilt = tilt_analysis(h)
    return {
        "effective_hamiltonian": h.to_dict(),
        "tilt": tilt.to_dict(),
        "predicted_j_eff_hz": abs(tilt.residual_coupling) / (2 * np.pi),
    }


def cmd_analyze(args) -> int:
    if not args.fid:
        raise ConfigError("analyze: --fid PATH is required")
    cfg = load_config(args.config) if args.config else None
    fid = read_fid(args.fid)
    count = (cfg or {}).get("analysis", {}).get("model_frequency_count", 2)
    fit = fit_envelope(fid, count)
    report = {
        "envelope": {
            "j_eff_hz": fit.envelope_frequency,
            "fit_residual": fit.fit_residual,
            "lifetime_s": envelope_lifetime(fit.envelope_frequency),
        }
    }
    meta = fid.metadata
    system = SpinSystem.from_dict(meta["system"]) if "system" in meta else None
    if system is not None and system.j:
        undecoupled = envelope_lifetime(abs(system.j))
        report["envelope"]["lifetime_ratio"] = report["envelope"]["lifetime_s"] / undecoupled
    seq_meta = meta.get("sequence", {})
    if system is not None and seq_meta.get("kind") == "decouple":
        report["decoupling"] = _decoupling_report(system, seq_meta["a_rad_s"], seq_meta["delta_t_s"])
    out = _out_dir(args, cfg)
    dump_json(report, out / "analysis.json")
    env = report["envelope"]
    _echo(f"J_eff = {env['j_eff_hz']:.6g} Hz (residual {env['fit_residual']:.3g}), lifetime {env['lifetime_s']:.6g} s")
    if "lifetime_ratio" in env:
        _echo(f"lifetime ratio vs undecoupled = {env['lifetime_ratio']:.4g}")
    return EXIT_OK


# --- effham -------------------------------------------------------------------


def _decoupling_params(cfg) -> tuple[float, float]:
    seq = cfg.get("sequence", {})
    if seq.get("kind") != "decouple":
        raise ConfigError("this command needs sequence/kind = \"decouple\"")
    return rf_amplitude(seq), seq["delta_t_s"]


def cmd_effham(args) -> int:
    cfg = _require_config(args)
    system = system_from_config(cfg)
    a, dt = _decoupling_params(cfg)
    block = build_decoupling_block(system, a, dt)
    u = compile_sequence(block)
    numeric = numeric_effective(u, 4 * dt)
    bch = bch_effective(system, a, dt)
    tilt_n, tilt_b = tilt_analysis(numeric), tilt_analysis(bch)
    rows = [(label, bch.decomposition.coefficients[label], numeric.decomposition.coefficients[label]) for label in BASIS_LABELS]
    two_pi_j = 2 * np.pi * system.j
    summary = {
        "theta": block.theta,
        "seed": _seed(args, cfg),
        "propagator_error_bch": phase_aligned_difference(u, bch.propagator()),
        "scaled_shift_ratio_i": abs(tilt_n.scaled_shift_i) / abs(system.omega_i) if system.omega_i else None,
        "scaled_shift_ratio_s": abs(tilt_n.scaled_shift_s) / abs(system.omega_s) if system.omega_s else None,
        "residual_coupling_ratio": tilt_n.residual_coupling / two_pi_j if two_pi_j else None,
        "predicted_scaled_shift_ratio": block.theta / 2,
        "predicted_residual_coupling_ratio": block.theta**2 / 3,
        "tilt_numeric": tilt_n.to_dict(),
        "tilt_bch": tilt_b.to_dict(),
    }
    out = _out_dir(args, cfg)
    for fmt in _formats(args, cfg):
        if fmt == "json":
            dump_json({"bch": bch.to_dict(), "numeric": numeric.to_dict(), "summary": summary}, out / "effham.json")
        else:
            write_table(out / "effham.csv", ["label", "bch_rad_s", "numeric_rad_s", "difference_rad_s"],
                        ((lab, float(b), float(n), float(n - b)) for lab, b, n in rows))
            write_table(out / "effham_summary.csv", ["quantity", "value"],
                        ((k, float(v)) for k, v in summary.items() if isinstance(v, (int, float))))
    _echo(f"{'label':>6} {'bch':>14} {'numeric':>14}")
    for lab, b, n in rows:
        if abs(b) > 1e-12 or abs(n) > 1e-12:
            _echo(f"{lab:>6} {b:14.6g} {n:14.6g}")
    _echo(f"scaled shift ratio (I) = {summary['scaled_shift_ratio_i']:.6g}  (theta/2 = {block.theta / 2:.6g})")
    if summary["residual_coupling_ratio"] is not None:
        _echo(f"residual coupling ratio = {summary['residual_coupling_ratio']:.6g}  (theta^2/3 = {block.theta**2 / 3:.6g})")
    return EXIT_OK


# --- sweep --------------------------------------------------------------------

SWEEP_COLUMNS = [
    "value",
    "theta",
    "a_rad_s",
    "delta_t_s",
    "scaled_shift_ratio_i",
    "scaled_shift_ratio_s",
    "residual_coupling_rad_s",
    "residual_coupling_ratio",
    "gamma_rad",
]


def _sweep_point(cfg: dict, parameter: str, value: float) -> dict:
    system_cfg = dict(cfg["system"])
    seq_cfg = cfg["sequence"]
    a = rf_amplitude(seq_cfg)
    dt = seq_cfg["delta_t_s"]
    if parameter == "theta":
        dt = value / a
    elif parameter == "delta_t_s":
        dt = value
    elif parameter == "a_rad_s":
        a = value
    else:
        system_cfg[parameter] = value
    system = system_from_config({"system": system_cfg})
    block = build_decoupling_block(system, a, dt)
    h = numeric_effective(compile_sequence(block), 4 * dt)
    tilt = tilt_analysis(h)
    two_pi_j = 2 * np.pi * system.j
    return {
        "value": value,
        "theta": a * dt,
        "a_rad_s": a,
        "delta_t_s": dt,
        "scaled_shift_ratio_i": abs(tilt.scaled_shift_i) / abs(system.omega_i) if system.omega_i else float("nan"),
        "scaled_shift_ratio_s": abs(tilt.scaled_shift_s) / abs(system.omega_s) if system.omega_s else float("nan"),
        "residual_coupling_rad_s": tilt.residual_coupling,
        "residual_coupling_ratio": tilt.residual_coupling / two_pi_j if two_pi_j else float("nan"),
        "gamma_rad": tilt.gamma,
        "effective_hamiltonian": h.to_dict(),
    }


def loglog_slope(x, y) -> float:
    x, y = np.abs(np.asarray(x, float)), np.abs(np.asarray(y, float))
    ok = (x > 0) & (y > 0)
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def cmd_sweep(args) -> int:
    cfg = _require_config(args)
    _decoupling_params(cfg)
    sweep = dict(cfg.get("sweep", {}))
    if args.parameter:
        sweep["parameter"] = args.parameter
    if args.values:
        try:
            sweep["values"] = [float(v) for v in args.values.split(",")]
        except ValueError:
            raise ConfigError(f"--values must be comma-separated numbers, got {args.values!r}") from None
    if "parameter" not in sweep or not sweep.get("values"):
        raise ConfigError("sweep needs a parameter and values (config sweep section or --parameter/--values)")
    parameter, values = sweep["parameter"], list(sweep["values"])
    if parameter not in {"theta", "delta_t_s", "a_rad_s", "j_hz", "omega_i_hz", "omega_s_hz"}:
        raise ConfigError(f"unknown sweep parameter {parameter!r}")

    out = _out_dir(args, cfg)
    points_dir = out / "points"
    points_dir.mkdir(exist_ok=True)
    fmts = _formats(args, cfg)

    def run(item):
        k, value = item
        point = _sweep_point(cfg, parameter, value)
        stem = points_dir / f"point_{k:03d}"
        _write_records(stem, [{c: point[c] for c in SWEEP_COLUMNS}], SWEEP_COLUMNS, [f for f in fmts if f == "csv"])
        dump_json(point, stem.with_suffix(".json"))
        return point

    with ThreadPoolExecutor(max_workers=sweep.get("max_workers")) as pool:
        points = list(pool.map(run, enumerate(values)))

    records = [{c: p[c] for c in SWEEP_COLUMNS} for p in points]
    _write_records(out / "sweep", records, SWEEP_COLUMNS, fmts)
    slope = loglog_slope([p["theta"] for p in points], [p["residual_coupling_rad_s"] for p in points])
    index = {
        "parameter": parameter,
        "values": values,
        "seed": _seed(args, cfg),
        "points": [f"points/point_{k:03d}.json" for k in range(len(values))],
        "residual_coupling_loglog_slope_vs_theta": slope,
    }
    dump_json(index, out / "index.json")
    for r in records:
        _echo(f"{parameter}={r['value']:.6g}: theta={r['theta']:.4g} shift ratio={r['scaled_shift_ratio_i']:.6g} "
              f"coupling ratio={r['residual_coupling_ratio']:.6g}")
    _echo(f"log-log slope of residual coupling vs theta = {slope:.4f}")
    return EXIT_OK


# --- deconv -------------------------------------------------------------------


def cmd_deconv(args) -> int:
    cfg = _require_config(args)
    if "deconv" not in cfg:
        raise ConfigError(f"{args.config}: a deconv section is required")
    system = system_from_config(cfg)
    a, dt = _decoupling_params(cfg)
    dcfg = cfg["deconv"]
    acq = cfg.get("acquisition", {})
    if "n_samples" not in acq:
        raise ConfigError(f"{args.config}: acquisition/n_samples is required for deconv")
    seed = _seed(args, cfg)
    z = simulate_rf_ensemble(
        system,
        a,
        dt,
        dcfg["scales"],
        acq["n_samples"],
        acq.get("truncate_at_s"),
        acq.get("zero_fill", 1),
        acq.get("blocks_per_sample", 1),
        dcfg.get("noise_sigma", 0.0),
        seed,
    )
    psf = calibrate_psf(z, tuple(dcfg["psf_window_hz"]), dcfg.get("nsigma", 3.0))
    grid = None
    if "grid_hz" in dcfg:
        g = dcfg["grid_hz"]
        grid = np.arange(g["start"], g["stop"] + g["step"] / 2, g["step"])
    report = deconvolve(z, psf, grid, dcfg.get("nonnegative", True))
    nsigma = dcfg.get("nsigma", 3.0)
    significant = report.significant(nsigma)
    out = _out_dir(args, cfg)
    fmts = _formats(args, cfg)
    _write_records(out / "psf", [{"offset_hz": o, "weight": w} for o, w in zip(psf.offsets, psf.weights)],
                   ["offset_hz", "weight"], fmts)
    lines = [
        {"frequency_hz": l.frequency, "amplitude": l.amplitude, "stderr": l.amplitude_stderr,
         "significant": int(l in significant)}
        for l in report.lines
    ]
    _write_records(out / "lines", lines, ["frequency_hz", "amplitude", "stderr", "significant"], fmts)
    _write_records(out / "blurred", [{"freq_hz": f, "value": v} for f, v in zip(z.frequencies, z.values)],
                   ["freq_hz", "value"], fmts)
    dump_json(
        {
            "seed": seed,
            "condition_number": report.condition_number,
            "residual_norm": report.residual_norm,
            "noise_estimate": report.noise_estimate,
            "n_lines": len(report.lines),
            "n_significant": len(significant),
            "nsigma": nsigma,
        },
        out / "deconv.json",
    )
    _echo(f"condition number {report.condition_number:.3g}, residual {report.residual_norm:.3g}, "
          f"{len(significant)} lines above {nsigma} sigma")
    for l in significant:
        _echo(f"  {l.frequency:.4f} Hz  amplitude {l.amplitude:.6g} +- {l.amplitude_stderr:.2g}")
    return EXIT_OK


# --- entry point --------------------------------------------------------------

COMMANDS = {
    "simulate": cmd_simulate,
    "spectrum": cmd_spectrum,
    "analyze": cmd_analyze,
    "effham": cmd_effham,
    "sweep": cmd_sweep,
    "deconv": cmd_deconv,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="homodecouple", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--out", metavar="DIR")
        p.add_argument("--seed", type=int, metavar="N")
        p.add_argument("--format", choices=["csv", "json"])
        if name in ("spectrum", "analyze"):
            p.add_argument("--fid", metavar="PATH", help="FID file written by simulate")
        if name == "spectrum":
            p.add_argument("--truncate-at", type=float, metavar="SECONDS")
            p.add_argument("--zero-fill", type=int, metavar="FACTOR")
        if name == "sweep":
            p.add_argument("--parameter", metavar="NAME")
            p.add_argument("--values", metavar="V1,V2,...")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RegimeError as exc:
        print(f"regime error: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except (EnvelopeFitError, DeconvolutionError) as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (ValueError, OSError, KeyError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
