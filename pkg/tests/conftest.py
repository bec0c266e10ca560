import math

import numpy as np
import pytest

from itcircles.preprocess import EdgePoint

ACCEPTANCE_LINES: dict = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    """Remember an acceptance outcome; printed in the terminal summary."""
    ACCEPTANCE_LINES[criterion] = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


def circle_point(a, b, r, theta, inward=True) -> EdgePoint:
    """Exact point on a circle with a unit radial gradient (real coordinates)."""
    c, s = math.cos(theta), math.sin(theta)
    sign = -1.0 if inward else 1.0
    return EdgePoint(a + r * c, b + r * s, sign * c, sign * s)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
