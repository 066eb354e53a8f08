import numpy as np
import pytest

from gamow import ComplexPole, PoleModel, model_intensity
from gamow.series import Series


@pytest.fixture
def pole2():
    return ComplexPole(1.0, 1.0, 2)


def synthetic(z, residues, points=401, lo=0.0, hi=4.0, noise=0.0, seed=None):
    """Intensity samples of a single-pole model, optionally with multiplicative noise."""
    e = np.linspace(lo, hi, points)
    y = model_intensity(PoleModel.single(z, residues), e)
    if noise:
        rng = np.random.default_rng(seed)
        y = y * (1.0 + noise * rng.standard_normal(e.size))
    return Series(e, y)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one summary line per acceptance criterion."""

    def record(number, title, ok, detail):
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
