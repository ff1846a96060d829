import math

import numpy as np
import pytest

from anisoexp.grid import BoxDomain, build_grid
from anisoexp.problem import AnisotropicProblem


def make_problem(rows, f, n=32, ndim=2, split=1, lam=1e-3):
    domain = BoxDomain.cube(ndim, split)
    subdivisions = [n] * ndim if np.isscalar(n) else n
    return AnisotropicProblem.from_strings(rows, f, domain, subdivisions, lam)


IDENTITY_2D = [["1", "0"], ["0", "1"]]


@pytest.fixture
def square_grid():
    return build_grid(BoxDomain.cube(2, 1), (16, 16))


@pytest.fixture
def sinsin_problem():
    return make_problem(IDENTITY_2D, "sin(x1)*sin(x2)", n=32)


@pytest.fixture
def rng():
    return np.random.default_rng(20241016)


PI = math.pi


_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def record_criterion():
    """Store a pass/fail line for the acceptance summary."""

    def record(number: int, passed: bool, detail: str):
        _CRITERIA[number] = (bool(passed), detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
