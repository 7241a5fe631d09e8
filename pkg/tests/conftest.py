import sys

import numpy as np
import pytest

from hartree_system.params_special import SystemParams


@pytest.fixture
def p5():
    return SystemParams(5, 1.0)


@pytest.fixture
def p6():
    return SystemParams(6, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def admissible_alphas(N, count=5):
    """count evenly spaced admissible alpha values for dimension N."""
    hi = min(N - 5.0 + 6.0 / (N - 2.0), float(N))
    return [hi * (i + 1) / (count + 1) for i in range(count)]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
