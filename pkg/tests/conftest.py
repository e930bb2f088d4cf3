"""Collects acceptance outcomes and prints one PASS/FAIL line per criterion."""

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

_CRITERIA: dict[int, dict] = {}


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    mark = item.get_closest_marker("acceptance")
    if mark is not None and (report.when == "call" or report.outcome != "passed"):
        entry = _CRITERIA.setdefault(mark.args[0], {"title": mark.kwargs.get("title", ""),
                                                    "outcomes": [], "details": []})
        entry["outcomes"].append(report.outcome)
        if report.when == "call":
            entry["details"].extend(v for k, v in item.user_properties if k == "detail")
    return report


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        entry = _CRITERIA[k]
        outcomes = entry["outcomes"]
        status = "PASS" if outcomes and all(o == "passed" for o in outcomes) else "FAIL"
        terminalreporter.write_line(f"criterion {k:>2}: {status}  {entry['title']}")
        for d in entry["details"]:
            terminalreporter.write_line(f"              {d}")
