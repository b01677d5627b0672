import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ---- acceptance summary: one pass/fail line per criterion ----------------

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion this test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not rep.failed):
        return
    n, title = mark.args
    entry = _criteria.setdefault(n, {"title": title, "failed": [], "passed": 0})
    if rep.failed:
        entry["failed"].append(item.name)
    elif rep.when == "call" and rep.passed:
        entry["passed"] += 1


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_criteria):
        e = _criteria[n]
        verdict = "FAIL" if e["failed"] else "PASS"
        line = f"criterion {n:2d} {verdict}  {e['title']}"
        if e["failed"]:
            line += f"  (failing: {', '.join(e['failed'])})"
        tr.write_line(line)
