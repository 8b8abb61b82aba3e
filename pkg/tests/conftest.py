import numpy as np
import pytest

from anderson_nare import FixedPointMap, build_problem

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def problem_cache():
    cache = {}

    def get(a, c, n):
        key = (a, c, n)
        if key not in cache:
            cache[key] = build_problem(a, c, n)
        return cache[key]

    return get


def recording_map(prob):
    """Wrap the NARE map so every evaluation point is kept (AA evaluates g once per iterate)."""
    points = []
    base = prob.fixed_point_map()

    def func(x):
        points.append(np.array(x, copy=True))
        return base(x)

    return FixedPointMap(base.dim, func), points
