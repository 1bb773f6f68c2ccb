import numpy as np
import pytest

from icts import spectral


@pytest.fixture(scope="session")
def crystal():
    return spectral.CrystalParams.calibrated()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = {}


@pytest.fixture
def record(request):
    """Store a one-line verdict for an acceptance criterion."""

    def _record(number, passed, detail):
        ACCEPTANCE[number] = (bool(passed), detail)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
