import pytest

from aqmfluid import NetworkParams, simulate
from aqmfluid.controllers import ConstantProbability


@pytest.fixture(scope="session", autouse=True)
def warm_jit():
    """Compile the numba kernel once so timing assertions measure steady-state runs."""
    simulate(NetworkParams(horizon=0.1), ConstantProbability(0.1))


_ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record a ``criterion N: PASS|FAIL`` line, then assert the criterion."""
    def _report(n, ok, detail):
        _ACCEPTANCE_LINES.append(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail
    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
