import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo",
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def _isolated_runs(tmp_path, monkeypatch):
    # CLI runs never write into the working tree during tests
    monkeypatch.setenv("TPA_FORECAST_RUNS", str(tmp_path / "runs"))


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, config):
    if config._acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in config._acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL/NOT RUN line for the end-of-session summary."""

    def record(label, passed, detail):
        status = {True: "PASS", False: "FAIL", None: "NOT RUN"}[passed]
        line = f"{status:<8}{label}: {detail}"
        request.config._acceptance_lines.append(line)
        print(line)
        return passed

    return record
