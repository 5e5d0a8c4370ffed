import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def vertical_step(h=8, w=8, lo=0, hi=255):
    g = np.full((h, w), lo, dtype=np.uint8)
    g[:, w // 2 :] = hi
    return g


def horizontal_step(h=8, w=8, lo=0, hi=255):
    return vertical_step(w, h, lo, hi).T.copy()


def rgb_const(value, h=10, w=10):
    return np.full((h, w, 3), value, dtype=np.uint8)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
