from __future__ import annotations

import pytest

from tagrec.folksonomy import Assignment, Folksonomy, build_index

_criteria: dict[str, tuple[str, list[str]]] = {}
_notes: list[str] = []


def make_folk(rows, tags=None):
    """Folksonomy from (user, tag, resource, timestamp) rows; tag strings
    default to ``t<id>``."""
    rows = [Assignment(*r) for r in rows]
    if tags is None:
        tags = {}
    tags = dict(tags)
    for a in rows:
        tags.setdefault(a.tag, f"t{a.tag}")
    return Folksonomy.from_assignments(rows, tags)


def make_index(rows, tags=None):
    return build_index(make_folk(rows, tags))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None or (report.when != "call" and report.passed):
        return
    n, title = marker
    _criteria.setdefault(str(n), (title, []))[1].append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep.criterion = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria, key=lambda n: (int(n.split("-")[0]), n)):
        title, outcomes = _criteria[n]
        if "failed" in outcomes:
            verdict = "FAIL"
        elif all(o == "skipped" for o in outcomes):
            verdict = "SKIP"
        else:
            verdict = "PASS"
        terminalreporter.write_line(f"criterion {n}: {verdict}  {title}")
    if _notes:
        terminalreporter.section("acceptance measurements")
        for line in _notes:
            terminalreporter.write_line(line)


@pytest.fixture
def note():
    """Record a line for the acceptance measurements section."""
    return _notes.append
