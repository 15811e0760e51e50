import os
import sys

import hypothesis
import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from storagevalue.timeseries_io import ScenarioData

hypothesis.settings.register_profile("default", max_examples=40, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

np.seterr(all="warn", under="ignore")


@pytest.fixture
def two_period():
    # buy cheap in period 1, discharge in period 2
    return ScenarioData(price=[1, 2], demand_forecast=[1, 1], renewable_forecast=[0, 0])


@pytest.fixture
def three_period():
    return ScenarioData(price=[3, 1, 2], demand_forecast=[1, 1, 1], renewable_forecast=[0, 0, 0])


@pytest.fixture
def storage_only_rps():
    # the second renewable unit can only reach demand through storage
    return ScenarioData(price=[1, 1], demand_forecast=[1, 1], renewable_forecast=[2, 0])


ACCEPTANCE_LINES = {}


@pytest.fixture
def acceptance():
    """Record one verdict line per acceptance criterion for the terminal summary."""

    def record(key, ok, detail):
        line = f"{key} {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[key] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k[2:])):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
