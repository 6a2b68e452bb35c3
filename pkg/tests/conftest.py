from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from maxmin_tsp import Instance

settings.register_profile(
    "repo",
    max_examples=25,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile("repo")

# filled by test_acceptance, echoed after the run so the per-criterion
# verdicts survive output capture
acceptance_lines = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture
def unit_square():
    return Instance.from_points([(0, 0), (1, 0), (1, 1), (0, 1)], "unit-square")


@pytest.fixture(scope="session")
def artifacts_dir():
    path = Path(__file__).parent / "artifacts"
    path.mkdir(exist_ok=True)
    return path
