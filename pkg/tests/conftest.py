import re
from collections import defaultdict

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=30,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

_CRITERIA = defaultdict(list)
_NOTES = {}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def record(request):
    """Attach a one-line measurement summary to an acceptance criterion."""
    def _record(text):
        _NOTES.setdefault(request.node.nodeid, []).append(text)
        print(text)
    return _record


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
    if m:
        _CRITERIA[int(m.group(1))].append((report.nodeid, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        runs = _CRITERIA[number]
        ok = all(outcome == "passed" for _, outcome in runs)
        notes = []
        for nodeid, _ in runs:
            notes.extend(_NOTES.get(nodeid, []))
        detail = "; ".join(notes) if notes else f"{len(runs)} case(s)"
        tr.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
