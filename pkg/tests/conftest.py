import numpy as np
import pytest

from ccibell.amplitudes import RadialIntegrals


@pytest.fixture(scope="session")
def rad():
    return RadialIntegrals.random(42)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_unit(rng, complex_=False):
    v = rng.normal(size=3) + (1j * rng.normal(size=3) if complex_ else 0)
    return v / np.sqrt(np.vdot(v, v).real)


ACCEPTANCE_LINES: list[str] = []


def report_criterion(number: int, title: str, passed: bool, detail: str) -> None:
    """Record and print one acceptance verdict line."""
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} -- {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
