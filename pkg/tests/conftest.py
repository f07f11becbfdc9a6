import math

import numpy as np
import pytest
from hypothesis import strategies as st

from pvdrem.pv_model import BENCHMARK_A, IVParams


def log_uniform(lo, hi):
    return st.floats(math.log(lo), math.log(hi)).map(math.exp)


# Physically plausible box for the lumped parameters.
plausible_a = st.builds(
    IVParams,
    a1=st.floats(100.0, 1000.0),
    a2=log_uniform(1e-8, 1e-4),
    a3=st.floats(0.005, 0.1),
    a4=st.floats(0.01, 0.5),
    a5=st.floats(0.005, 0.2),
)


def sample_plausible(rng, n):
    """``n`` random vectors from the plausible box."""
    out = []
    for _ in range(n):
        out.append(IVParams(
            a1=rng.uniform(100.0, 1000.0),
            a2=math.exp(rng.uniform(math.log(1e-8), math.log(1e-4))),
            a3=rng.uniform(0.005, 0.1),
            a4=rng.uniform(0.01, 0.5),
            a5=rng.uniform(0.005, 0.2),
        ))
    return out


@pytest.fixture
def bench_a():
    return BENCHMARK_A


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# Acceptance criteria report -------------------------------------------------

CRITERIA = {}


def report_criterion(number, passed, detail):
    """Record and print one acceptance line; returns ``passed``."""
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    CRITERIA[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[number])
