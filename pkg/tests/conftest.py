import pytest

from starjunction import LatticeSpec, StarGraphSpec

ACCEPTANCE_LINES = []


@pytest.fixture
def y_junction():
    return StarGraphSpec(3, 1.0)


@pytest.fixture
def small_lattice():
    return LatticeSpec(0.1, 100, 0.001)


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion."""

    def _report(number, title, passed, detail):
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} -- {detail}")
        return passed

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
