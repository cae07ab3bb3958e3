"""Collect per-criterion outcomes of the acceptance suite and print a summary."""

import pytest

_criteria = {}


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        n, label = mark.args
        ok, _ = _criteria.get(n, (True, label))
        if report.failed or (report.when == "call" and report.skipped):
            ok = False
        _criteria[n] = (ok, label)
    return report


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        ok, label = _criteria[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {label}")
