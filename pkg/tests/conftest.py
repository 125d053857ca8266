import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from homodecouple import SpinSystem
from homodecouple.spin import Coupling

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

TWO_PI = 2 * np.pi


@st.composite
def spin_systems(draw, coupling=Coupling.ISING, max_hz=200.0, max_j=5.0):
    nu_i = draw(st.floats(-max_hz, max_hz))
    nu_s = draw(st.floats(-max_hz, max_hz))
    j = draw(st.floats(-max_j, max_j))
    return SpinSystem.from_hz(nu_i, nu_s, j, coupling)


@st.composite
def decoupling_params(draw, max_regime=0.45):
    """System plus (a, dt) inside the valid expansion regime."""
    system = draw(spin_systems())
    a = draw(st.floats(100.0, 5000.0))
    frac = draw(st.floats(0.02, 1.0))
    dt = frac * max_regime / np.hypot(a, system.max_shift)
    return system, a, dt


@st.composite
def hermitian_4x4(draw, scale=10.0):
    vals = draw(st.lists(st.floats(-scale, scale), min_size=32, max_size=32))
    m = np.array(vals[:16]).reshape(4, 4) + 1j * np.array(vals[16:]).reshape(4, 4)
    return (m + m.conj().T) / 2


@pytest.fixture
def fig_system():
    return SpinSystem.from_hz(120.0, 100.0, 1.0)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
