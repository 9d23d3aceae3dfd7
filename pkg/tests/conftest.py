import numpy as np
import pytest

from mixedelast.mesh import uniform_mesh


@pytest.fixture
def rng():
    return np.random.default_rng(20260418)


@pytest.fixture(params=[1, 2, 3, 4])
def mesh(request):
    return uniform_mesh(request.param)


@pytest.fixture(params=[(k, fam) for fam in ("full", "reduced") for k in (1, 2, 3)],
                ids=lambda p: f"k{p[0]}-{p[1]}")
def order_family(request):
    return request.param


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(name): headline criterion reported in the summary")
    config._acceptance_lines = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when != "call":
        return
    detail = dict(item.user_properties).get("detail", "")
    status = "PASS" if report.passed else "FAIL"
    line = f"[{status}] {marker.args[0]}" + (f": {detail}" if detail else "")
    item.config._acceptance_lines.append(line)
    print("\n" + line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
