import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from homodecouple.cli import main
from homodecouple.io import read_fid, read_spectrum, read_table

from oracles import doublet_fid

DEMOS = Path(__file__).resolve().parents[1] / "demos"
FIG2 = DEMOS / "fig2" / "config.json"
FIG3 = DEMOS / "fig3" / "config.json"


def write_config(tmp_path, **overrides):
    cfg = json.loads(FIG3.read_text())
    cfg.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg, indent=2))
    return path


def test_simulate_fig2_matches_oracle(tmp_path, capsys):
    assert main(["simulate", "--config", str(FIG2), "--out", str(tmp_path)]) == 0
    fid = read_fid(tmp_path / "fid.json")
    assert np.max(np.abs(fid.samples - doublet_fid(fid.times, 120, 100, 1))) < 1e-8
    assert (tmp_path / "fid.csv").exists()
    out = capsys.readouterr().out
    assert "theta = 0" in out and "Nyquist = 500 Hz" in out


def test_simulate_single_sample(tmp_path):
    cfg = json.loads(FIG2.read_text())
    cfg["acquisition"]["n_samples"] = 1
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path), "--format", "json"]) == 0
    assert read_fid(tmp_path / "fid.json").samples.tolist() == [1.0]
    assert not (tmp_path / "fid.csv").exists()


def test_fig3_pipeline(tmp_path, capsys):
    assert main(["simulate", "--config", str(FIG3), "--out", str(tmp_path)]) == 0
    assert "block duration = 0.0008 s" in capsys.readouterr().out
    assert main(["spectrum", "--config", str(FIG3), "--fid", str(tmp_path / "fid.json"), "--out", str(tmp_path)]) == 0
    spec = read_spectrum(tmp_path / "spectrum.json")
    assert spec.resolution == pytest.approx(0.05)
    _, peaks = read_table(tmp_path / "peaks.csv")
    assert len(peaks) == 2
    assert main(["analyze", "--config", str(FIG3), "--fid", str(tmp_path / "fid.json"), "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "analysis.json").read_text())
    assert report["envelope"]["j_eff_hz"] == pytest.approx(0.2**2 / 3, rel=0.15)
    assert report["decoupling"]["predicted_j_eff_hz"] == pytest.approx(report["envelope"]["j_eff_hz"], rel=1e-3)


def test_spectrum_flags_override(tmp_path):
    main(["simulate", "--config", str(FIG2), "--out", str(tmp_path), "--format", "csv"])
    code = main(["spectrum", "--fid", str(tmp_path / "fid.csv"), "--truncate-at", "1.0", "--zero-fill", "2", "--out", str(tmp_path)])
    assert code == 0
    spec = read_spectrum(tmp_path / "spectrum.csv")
    assert spec.frequencies[1] - spec.frequencies[0] == pytest.approx(0.5)


def test_spectrum_of_zero_signal(tmp_path):
    (tmp_path / "zero.csv").write_text("time_s,signal\n" + "".join(f"{k * 1e-3!r},0.0\n" for k in range(64)))
    assert main(["spectrum", "--fid", str(tmp_path / "zero.csv"), "--out", str(tmp_path)]) == 0
    _, data = read_table(tmp_path / "spectrum.csv")
    assert np.all(data[:, 1:] == 0)


def test_effham_table(tmp_path, capsys):
    assert main(["effham", "--config", str(FIG3), "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "effham.json").read_text())
    assert doc["summary"]["scaled_shift_ratio_i"] == pytest.approx(0.1, rel=0.02)
    assert doc["summary"]["residual_coupling_ratio"] == pytest.approx(0.0133, rel=0.15)
    lines = (tmp_path / "effham.csv").read_text().splitlines()
    assert lines[0] == "label,bch_rad_s,numeric_rad_s,difference_rad_s"
    assert len(lines) == 17


def test_sweep_theta(tmp_path, capsys):
    assert main(["sweep", "--config", str(FIG3), "--out", str(tmp_path), "--parameter", "theta", "--values", "0.05,0.1,0.2"]) == 0
    index = json.loads((tmp_path / "index.json").read_text())
    assert index["residual_coupling_loglog_slope_vs_theta"] == pytest.approx(2.0, abs=0.1)
    assert len(index["points"]) == 3
    for p in index["points"]:
        assert (tmp_path / p).exists()
    header, data = read_table(tmp_path / "sweep.csv")
    assert header[0] == "value" and data.shape == (3, len(header))


def test_deconv_command(tmp_path):
    cfg = write_config(
        tmp_path,
        acquisition={"n_samples": 1000, "blocks_per_sample": 25, "zero_fill": 1},
        deconv={
            "scales": [[0.98, 0.25], [1.0, 0.5], [1.02, 0.25]],
            "noise_sigma": 0.01,
            "psf_window_hz": [11.0, 13.0],
            "grid_hz": {"start": 9.0, "stop": 13.0, "step": 0.25},
        },
    )
    assert main(["deconv", "--config", str(cfg), "--out", str(tmp_path), "--seed", "3"]) == 0
    report = json.loads((tmp_path / "deconv.json").read_text())
    assert report["seed"] == 3
    assert report["n_significant"] >= 1
    assert (tmp_path / "psf.csv").exists() and (tmp_path / "lines.csv").exists()


def test_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        main(["simulate", "--config", str(FIG3), "--out", str(out), "--seed", "5"])
        main(["sweep", "--config", str(FIG3), "--out", str(out)])
    for name in ("fid.csv", "fid.json", "sweep.csv", "index.json", "points/point_001.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_exit_code_config_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "schema_version": 1,\n  "system": {"omega_i_hz": "x", "omega_s_hz": 1, "j_hz": 1}\n}')
    assert main(["simulate", "--config", str(bad)]) == 2
    assert f"{bad}:3" in capsys.readouterr().err
    assert main(["simulate"]) == 2
    assert main(["spectrum"]) == 2


def test_exit_code_regime_error(tmp_path):
    cfg = write_config(tmp_path, sequence={"kind": "decouple", "a_rad_s": 1e3, "delta_t_s": 6e-4})
    assert main(["effham", "--config", str(cfg), "--out", str(tmp_path)]) == 3


def test_exit_code_fit_failure(tmp_path):
    rng = np.random.default_rng(0)
    rows = "".join(f"{k * 1e-3!r},{float(v)!r}\n" for k, v in enumerate(rng.normal(size=2000)))
    (tmp_path / "noise.csv").write_text("time_s,signal\n" + rows)
    assert main(["analyze", "--fid", str(tmp_path / "noise.csv"), "--out", str(tmp_path)]) == 4
    cfg = write_config(
        tmp_path,
        acquisition={"n_samples": 500, "blocks_per_sample": 25},
        deconv={"scales": [[1.0, 1.0]], "psf_window_hz": [11.0, 13.0], "grid_hz": {"start": 9.0, "stop": 13.0, "step": 0.001}},
    )
    assert main(["deconv", "--config", str(cfg), "--out", str(tmp_path)]) == 4


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "homodecouple", "simulate", "--config", str(FIG2), "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "fid.csv").exists()
