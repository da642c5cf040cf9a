import os

import pytest
from hypothesis import HealthCheck, settings

from critotto.cycle import CycleConfig

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=1000,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def ref_cfg():
    """L = 100, h1 = 10, h2 = 1, T_H = 1000, tau1 = 10 (T_C, tau2 varied per test)."""
    return CycleConfig(L=100, h1=10.0, h2=1.0, T_H=1000.0, T_C=1.0, tau1=10.0, tau2=100.0)


# one line per acceptance criterion, echoed after the run so it survives output capture
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    def emit(line: str) -> None:
        ACCEPTANCE_LINES.append(line)
        print(line)
    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
