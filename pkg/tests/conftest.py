import numpy as np
import pytest

from blmab.scenario import ScenarioConfig, build_scenario


@pytest.fixture
def small_scenario():
    return build_scenario(ScenarioConfig(tenant_count=4, horizon=200, batch_size=2, seed=3))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
