import numpy as np
import pytest

from ccradon.geometry import builtin_models

# populated by the acceptance module; echoed after the run so the
# per-criterion lines survive output capture
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def models():
    return builtin_models()


@pytest.fixture(scope="session")
def parabola(models):
    return models["parabola"]


@pytest.fixture(scope="session")
def cubic(models):
    return models["cubic"]


@pytest.fixture(scope="session")
def quartic(models):
    return models["quartic"]


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
