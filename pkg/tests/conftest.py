import time

import pytest

from tricoupler.design import CouplerDesign
from tricoupler.material import MaterialModel, Polarization
from tricoupler.modesolver import CouplerGeometry
from tricoupler.spdc import solve_mode_set

H, V = Polarization.H, Polarization.V
PUMP = 0.675

# criterion lines collected by test_acceptance.py, echoed after the run
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def material():
    # default contrasts: three guided supermodes per polarization over the whole 1250-1450 nm sweep
    return MaterialModel(delta_n_H=0.0024, delta_n_V=0.0025)


@pytest.fixture(scope="session")
def geometry():
    return CouplerGeometry()


@pytest.fixture(scope="session")
def degenerate_modes(material, geometry):
    return solve_mode_set(material, geometry, PUMP, 2 * PUMP)


@pytest.fixture(scope="session")
def designer(material, geometry):
    return CouplerDesign(material, geometry, PUMP, workers=1)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def design_point(designer):
    """Designed grating (from case A) and both wavelength sweeps at it."""
    grating_a = designer.design_grating(0)
    grating_b = designer.design_grating(1)
    K = grating_a.grating_frequency
    start = time.perf_counter()
    sweep_a = designer.sweep_signal_wavelength(0, K)
    seconds = time.perf_counter() - start
    return {
        "grating_a": grating_a,
        "grating_b": grating_b,
        "K": K,
        "sweep_a": sweep_a,
        "sweep_a_seconds": seconds,
        "sweep_b": designer.sweep_signal_wavelength(1, K),
    }
