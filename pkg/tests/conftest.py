import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))


@pytest.fixture
def rng():
    return np.random.default_rng(20210407)


def random_instance(rng, max_hw=8, max_c=4, p=0.6, min_fg=1):
    while True:
        h, w = (int(v) for v in rng.integers(1, max_hw + 1, size=2))
        c = int(rng.integers(1, max_c + 1))
        mask = rng.random((h, w)) < p
        if mask.sum() >= min_fg:
            return rng.normal(size=(c, h, w)), mask


_ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    """Record a one-line verdict for an acceptance criterion."""
    entry = {"name": request.node.name, "detail": ""}
    _ACCEPTANCE.append(entry)

    def note(detail):
        entry["detail"] = detail

    yield note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and "criterion" in item.fixturenames:
        for entry in _ACCEPTANCE:
            if entry["name"] == item.name:
                entry["passed"] = report.passed


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for entry in _ACCEPTANCE:
        verdict = "PASS" if entry.get("passed") else "FAIL"
        terminalreporter.write_line(f"{verdict}  {entry['name']}  {entry['detail']}")
