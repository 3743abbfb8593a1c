import os
import sys
from pathlib import Path

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

NETLISTS = Path(__file__).resolve().parent.parent / "netlists"

# acceptance criteria report: filled by the ``criterion`` fixture
_CRITERIA = {}


@pytest.fixture
def netlists():
    return NETLISTS


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion; call with (number, detail) after the checks."""
    holder = {}

    def record(number, detail=""):
        holder["number"] = number
        holder["detail"] = detail

    yield record
    if "number" in holder:
        _CRITERIA[holder["number"]] = (request.node.nodeid, holder["detail"])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and "test_acceptance" in item.nodeid:
        item.config._acceptance = getattr(item.config, "_acceptance", {})
        item.config._acceptance[item.nodeid] = rep.passed


def pytest_terminal_summary(terminalreporter, config):
    results = getattr(config, "_acceptance", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, passed in results.items():
        name = nodeid.split("::")[-1]
        detail = next((d for n, d in _CRITERIA.values() if n == nodeid), "")
        line = f"{'PASS' if passed else 'FAIL'}  {name}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
