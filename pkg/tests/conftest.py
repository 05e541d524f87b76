import math

import numpy as np
import pytest

from diffbeam.array import ArrayGeometry, wavenumber
from diffbeam.pattern import solve_coefficients

ACCEPTANCE_LINES = []

HYBRID_KINDS = ["omni", "bidirectional"] * 5 + ["omni"]
NULL_OFFSETS = (math.pi / 2, 5 * math.pi / 6)


def record_criterion(number, title, passed, detail=""):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title}"
    if detail:
        line += f" -- {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def hybrid_geom():
    return ArrayGeometry.uniform(0.01, HYBRID_KINDS)


@pytest.fixture
def target_pattern():
    return solve_coefficients(math.pi / 2, NULL_OFFSETS, 2)


@pytest.fixture
def k1k():
    return wavenumber(1000.0)


def random_geometry(rng, max_m=12):
    M = int(rng.integers(1, max_m + 1))
    spacing = rng.uniform(0.005, 0.04)
    a = rng.choice([1.0, 0.0, 0.5, 1 / 3, math.sqrt(2) - 1, rng.uniform()], size=M)
    return ArrayGeometry.uniform(spacing, [float(v) for v in a])
