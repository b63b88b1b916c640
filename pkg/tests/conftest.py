import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from opideal.config import RunConfig
from opideal.summing import OperatorMatrix

settings.register_profile(
    "opideal", max_examples=12, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("opideal")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def cfg():
    return RunConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_op(rng, m, n, u, v):
    return OperatorMatrix.from_array(rng.uniform(-1, 1, (m, n)), u, v)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
