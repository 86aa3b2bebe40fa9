import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from casgep.vonthunen import CommoditySpec, Economy, TransportCost

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def ring_economy(radii=range(1, 11), angles=8, companies=(1, 1)):
    """Dairy (steep transport) and grain (flat transport) around a market at the origin."""
    ang = 2 * np.pi * np.arange(angles) / angles
    pts = np.array([[r * np.cos(a), r * np.sin(a)] for r in radii for a in ang])
    dairy = CommoditySpec(1, 1.0, 2.0, 20.0, TransportCost.linear(1.5), 1.0, demand=12.0, companies=companies[0])
    grain = CommoditySpec(2, 1.0, 2.0, 10.0, TransportCost.linear(0.3), 1.0, demand=9.0, companies=companies[1])
    return Economy(pts, [0.0, 0.0], (dairy, grain))


def line_economy(companies=(1, 1)):
    """Three locations on a line; commodity 1 is good at the two inner ones, 2 at the outer one."""
    locs = np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
    c1 = CommoditySpec(1, 1.0, 2.0, 20.0, TransportCost.linear(4.0), 1.0, demand=6.0, companies=companies[0])
    c2 = CommoditySpec(2, 1.0, 2.0, 10.0, TransportCost.linear(0.5), 1.0, demand=9.0, companies=companies[1])
    return Economy(locs, [0.0, 0.0], (c1, c2))


def counterexample_economy():
    """Two locations, net values 1 and 2 for commodities 1 and 2 everywhere."""
    locs = np.array([[1.0, 0.0], [0.0, 1.0]])
    c1 = CommoditySpec(1, 1.0, 1.0, 4.0, TransportCost.constant(1.0), 1.0)
    c2 = CommoditySpec(2, 1.0, 1.0, 5.0, TransportCost.constant(1.0), 1.0)
    return Economy(locs, [0.0, 0.0], (c1, c2))


@pytest.fixture
def rings():
    return ring_economy()


@pytest.fixture
def line():
    return line_economy()


@pytest.fixture
def counterexample():
    return counterexample_economy()


# -- acceptance summary ------------------------------------------------------

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    if report.when == "call" or report.outcome != "passed":
        number, title = marker
        entry = _criteria.setdefault(number, {"title": title, "failed": [], "passed": []})
        (entry["passed"] if report.outcome == "passed" else entry["failed"]).append(report.nodeid.split("::")[-1])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep.criterion = tuple(m.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        status = "FAIL" if entry["failed"] else "PASS"
        line = f"criterion {number} ({entry['title']}): {status}"
        if entry["failed"]:
            line += "  [failing: " + ", ".join(entry["failed"]) + "]"
        tr.write_line(line)
