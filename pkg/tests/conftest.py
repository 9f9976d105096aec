import numpy as np
import pytest

from qmoire.config import resolve_preset

ACCEPTANCE_LINES: list = []


def max_relative(a, b) -> float:
    """max|a - b| / max|b|; traces can contain exact zeros."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


@pytest.fixture(scope="session")
def presets():
    return {name: resolve_preset(name) for name in ("fig3a", "fig3b", "fig5a", "fig5b")}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
