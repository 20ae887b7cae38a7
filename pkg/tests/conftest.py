import re

import pytest
from hypothesis import HealthCheck, settings

from qnmfield.profiles import layered, make_dielectric_rod
from qnmfield.spectrum import build_spectrum

settings.register_profile("default", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def rod5():
    return make_dielectric_rod(5, 1, 1)


@pytest.fixture(scope="session")
def rod5_spec(rod5):
    return build_spectrum(rod5, 200)


@pytest.fixture(scope="session")
def rod50():
    return make_dielectric_rod(50, 1, 1)


@pytest.fixture(scope="session")
def two_seg():
    return layered([0.0, 0.4], [9.0, 4.0], 1.0)


@pytest.fixture(scope="session")
def two_seg_spec(two_seg):
    return build_spectrum(two_seg, 30)


# one summary line per acceptance criterion
_AC = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_ac(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2))
    if report.when == "call" or report.outcome != "passed":
        prev = _AC.get(key, "PASS")
        _AC[key] = "FAIL" if (report.failed or prev == "FAIL") else (
            "SKIP" if report.skipped else "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _AC:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), status in sorted(_AC.items()):
        terminalreporter.write_line(f"AC{num:02d} {name:<40} {status}")
