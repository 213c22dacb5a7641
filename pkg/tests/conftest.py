import numpy as np
import pytest

from ramanfwm.response import RamanModel, build_response

ACCEPTANCE = {}


@pytest.fixture(scope="session")
def silica():
    return build_response(RamanModel.silica(0.18))


@pytest.fixture(scope="session")
def silica_full():
    return build_response(RamanModel.silica(1.0))


@pytest.fixture(scope="session")
def instant():
    return build_response(RamanModel.instantaneous())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'} ({detail})")
