from __future__ import annotations

import random

import pytest

from relattice.core import Universe, all_relations

U2 = Universe.of(x=["1", "2"], y=["a", "b"])
U3 = Universe.of(x=["1", "2", "3"], y=["a", "b", "c"], z=["p", "q", "r"])


@pytest.fixture(scope="session")
def u2():
    return U2


@pytest.fixture(scope="session")
def u3():
    return U3


@pytest.fixture(scope="session")
def u2_elements():
    return list(all_relations(U2))


@pytest.fixture
def rng():
    return random.Random(20240501)


# -- acceptance reporting: tests/test_acceptance.py records one verdict per criterion

ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("criterion")
        if marker is not None:
            item.user_properties.append(("criterion", tuple(marker.args)))


def pytest_runtest_logreport(report):
    if report.when == "setup" and report.passed:
        return
    if report.when == "teardown" and not report.failed:
        return
    for key, value in report.user_properties:
        if key == "criterion":
            number, title = value
            verdict = "PASS" if report.passed else "FAIL"
            if ACCEPTANCE.get(number, (title, "PASS"))[1] == "FAIL":
                verdict = "FAIL"
            ACCEPTANCE[number] = (title, verdict)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, verdict = ACCEPTANCE[number]
        terminalreporter.write_line(f"{verdict} criterion {number:>2}: {title}")
