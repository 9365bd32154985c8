import math
from dataclasses import replace

import pytest

from kitepath.config import RunConfig
from kitepath.model import Environment, KiteParams
from kitepath.sweep import run_sweep


@pytest.fixture
def kite():
    return KiteParams(mass=1.0, area=0.28, c_lift=1.2, c_drag=0.12)


@pytest.fixture
def env():
    return Environment(air_density=1.225, wind_speed=10.0)


@pytest.fixture
def config():
    return RunConfig()


@pytest.fixture(scope="session")
def ellipse_sweep():
    return run_sweep(RunConfig())


@pytest.fixture(scope="session")
def eight_sweep():
    return run_sweep(replace(RunConfig(), shape="eight"))


@pytest.fixture(scope="session")
def sweeps(ellipse_sweep, eight_sweep):
    return {"ellipse": ellipse_sweep, "eight": eight_sweep}


DEG = math.pi / 180


# one PASS/FAIL line per acceptance criterion at the end of the run
_acceptance = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and report.when == "call":
        name = report.nodeid.split("::")[-1]
        _acceptance[name] = report.outcome
    elif "test_acceptance.py" in report.nodeid and report.when == "setup" and report.outcome != "passed":
        _acceptance[report.nodeid.split("::")[-1]] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance):
        status = "PASS" if _acceptance[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}")
