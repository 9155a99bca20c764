import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_CRITERIA: dict[str, str] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and item.name.startswith("test_criterion_"):
        _CRITERIA[item.name] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # one pass/fail line per acceptance criterion, independent of capture
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for name in sorted(_CRITERIA):
            terminalreporter.write_line(f"{name}: {_CRITERIA[name].upper()}")
