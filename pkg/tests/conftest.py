"""Print one PASS/FAIL line per acceptance criterion after the run."""

import re

_CRITERIA: dict = {}
_PATTERN = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


def pytest_runtest_logreport(report):
    match = _PATTERN.search(report.nodeid)
    if match is None:
        return
    num = int(match.group(1))
    name = match.group(2).replace("_", " ")
    if report.when == "call":
        _CRITERIA[num] = (name, report.outcome)
    elif report.when == "setup" and report.outcome != "passed":
        _CRITERIA[num] = (name, report.outcome)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.ensure_newline()
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        name, outcome = _CRITERIA[num]
        word = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {num} ({name}): {word}")
