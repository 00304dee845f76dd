"""Shared fixtures and the acceptance summary printed at the end of the run."""

from __future__ import annotations

import pytest

from parahyp.verify import mms_case
from parahyp.traces import solve_problem

_RESULTS: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    label, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        status = "PASS" if rep.passed else "FAIL"
        _RESULTS[label] = (status, title)


def _sort_key(label: str):
    head = label.rstrip("abcdefghijklmnopqrstuvwxyz-")
    return (int(head) if head.isdigit() else 99, label)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_RESULTS, key=_sort_key):
        status, title = _RESULTS[label]
        terminalreporter.write_line(f"criterion {label:>10s}: {status}  {title}")


_SOLVES: dict = {}


@pytest.fixture(scope="session")
def solved():
    """Memoised ``solve_problem`` for catalog cases: ``solved(name, M, K=8)``."""

    def get(name: str, M: int, K: int = 8):
        key = (name, M, K)
        if key not in _SOLVES:
            _SOLVES[key] = solve_problem(mms_case(name).problem(M, K))
        return _SOLVES[key]

    return get
