"""Every narrative demo runs to completion and prints its headline result."""

import subprocess
import sys
from pathlib import Path

import pytest

DEMOS = Path(__file__).resolve().parents[1] / "demos"

EXPECTED = {
    "01_coupled_doublets.py": "line at  119.500 Hz",
    "02_broadband_decoupling.py": "times longer",
    "03_effective_hamiltonian.py": "coupling ratio",
    "04_isotropic_coupling.py": "scanned schedule",
    "05_constant_time.py": "d1 + d2 = 4.0 s",
    "06_rf_inhomogeneity.py": "condition number",
}


def test_every_demo_is_listed():
    assert sorted(p.name for p in DEMOS.glob("[0-9]*.py")) == sorted(EXPECTED)


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_demo_runs(name):
    proc = subprocess.run([sys.executable, str(DEMOS / name)], capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert EXPECTED[name] in proc.stdout
