import numpy as np
import pytest
from hypothesis import settings

from arcad.airframe import build_allocation_matrix, flat_quadrotor, tilted_hexarotor

ACCEPTANCE_LINES = []

# wall-clock deadlines make property tests flaky on slow machines
settings.register_profile("arcad", deadline=None)
settings.load_profile("arcad")


@pytest.fixture(scope="session")
def quad():
    return flat_quadrotor()


@pytest.fixture(scope="session")
def hexa():
    return tilted_hexarotor()


@pytest.fixture(scope="session")
def hexa_B(hexa):
    return build_allocation_matrix(hexa)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion."""
    def _report(label, ok, detail=""):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip())
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
