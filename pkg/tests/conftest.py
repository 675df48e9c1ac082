"""Prints a one-line verdict per acceptance check at the end of a run."""

import sys

_acceptance_results = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.failed:
        _acceptance_results[name] = "FAIL"
    elif report.skipped:
        _acceptance_results.setdefault(name, "SKIP")
    elif report.when == "call":
        _acceptance_results.setdefault(name, "PASS")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    labels = getattr(module, "CRITERIA", {}) if module else {}
    terminalreporter.section("acceptance criteria")
    for name, verdict in _acceptance_results.items():
        terminalreporter.write_line(f"{verdict}  {labels.get(name, name)}")
