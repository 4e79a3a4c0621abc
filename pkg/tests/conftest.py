import numpy as np
import pytest

from srab.models import build_micro_edsr, MicroEdsrConfig, build_bicubic_model


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def bicubic():
    return build_bicubic_model(4)


@pytest.fixture(scope="session")
def tiny_micro():
    """Random-weight micro network small enough for finite-difference checks."""
    return build_micro_edsr(MicroEdsrConfig(channels=4, blocks=1), seed=7, name="tiny")


@pytest.fixture(scope="session")
def micro_random():
    return build_micro_edsr(MicroEdsrConfig(), seed=3)



ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail):
    """Log one acceptance criterion; the lines are repeated in the terminal summary."""
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} | {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
