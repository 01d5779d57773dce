"""Acceptance bookkeeping: tests marked ``criterion(n, title)`` roll up into one
PASS/FAIL line per criterion in the terminal summary."""
from __future__ import annotations

import pytest

_CRITERIA = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_CRITERIA] = {}


def _entry(config, marker):
    number, title = marker.args
    return config.stash[_CRITERIA].setdefault(number, {"title": title, "ok": True, "ran": 0,
                                                       "details": []})


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    rep = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None and (rep.when == "call" or rep.failed):
        entry = _entry(item.config, marker)
        entry["ran"] += rep.when == "call"
        entry["ok"] = entry["ok"] and not rep.failed
    return rep


@pytest.fixture
def record(request):
    """Append a line of measured values to the summary of this test's criterion."""
    marker = request.node.get_closest_marker("criterion")
    entry = _entry(request.config, marker)

    def add(line: str) -> None:
        entry["details"].append(line)
        print(line)

    return add


def pytest_terminal_summary(terminalreporter):
    crit = terminalreporter.config.stash[_CRITERIA]
    if not crit:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(crit):
        e = crit[n]
        status = "PASS" if e["ok"] and e["ran"] else ("FAIL" if e["ran"] else "NOT RUN")
        tr.write_line(f"criterion {n:2d}: {status}  {e['title']}")
    tr.section("acceptance details")
    for n in sorted(crit):
        for line in crit[n]["details"]:
            tr.write_line(f"[{n}] {line}")
