import numpy as np
import pytest

from chandra.grid import RadialDensity, RadialGrid
from chandra.kinetic import PhysicalParams
from chandra.lane_emden import default_profile


@pytest.fixture(scope="session")
def profile():
    return default_profile()


@pytest.fixture(scope="session")
def params():
    return PhysicalParams(q=2, m=1.0)


@pytest.fixture(scope="session")
def grid():
    return RadialGrid.graded(2048, 20.0)


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Usage: ``acceptance(number, title, ok, detail)``; the line is printed
    immediately and repeated in the terminal summary.
    """
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def record(number, title, ok, detail):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        if reporter is not None:
            reporter.write_line("")
            reporter.write_line(line)
        else:
            print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
