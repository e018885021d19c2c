import sys

import pytest

from polyshare.field import MERSENNE_61, PrimeField
from polyshare.matrix import Matrix
from polyshare.rng import derive_rng


@pytest.fixture
def f101():
    return PrimeField(101)


@pytest.fixture
def big():
    return PrimeField(MERSENNE_61)


@pytest.fixture
def rng():
    return derive_rng(12345, 0)


def random_matrix(rows, cols, p, rng):
    return Matrix.random(rows, cols, p, rng)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    RESULTS = mod.RESULTS
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, desc = RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {desc}")
