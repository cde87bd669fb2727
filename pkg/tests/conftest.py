"""Shared pytest wiring: the acceptance-summary report.

Each test in ``test_acceptance.py`` maps to one numbered acceptance
criterion; after the run, one PASS/FAIL/SKIP line per criterion is printed so
the gate can be read at a glance.
"""

from __future__ import annotations

import re

_CRITERION = re.compile(r"test_c(\d+)_([a-z0-9_]+)")

_RESULTS: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    match = _CRITERION.search(report.nodeid)
    if not match:
        return
    number = int(match.group(1))
    title = match.group(2).replace("_", "-")
    if report.when == "call":
        outcome = "PASS" if report.passed else "FAIL"
        _RESULTS[number] = (title, outcome)
    elif report.when == "setup":
        if report.skipped:
            _RESULTS[number] = (title, "SKIP")
        elif report.failed:
            _RESULTS[number] = (title, "FAIL (setup)")


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, outcome = _RESULTS[number]
        line = f"criterion {number:>2}  {title:<32} {outcome}"
        markup = {"green": outcome == "PASS", "yellow": outcome == "SKIP"}
        if outcome.startswith("FAIL"):
            markup = {"red": True}
        terminalreporter.write_line(line, **markup)
