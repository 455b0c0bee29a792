import os

import numpy as np
import pytest
from hypothesis import settings, strategies as st

from lorentzcap.stepfn import StepFunction

settings.register_profile("default", max_examples=60, deadline=None)
settings.register_profile("thorough", max_examples=600, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

values = st.floats(0.0, 50.0, allow_nan=False)
weights = st.floats(1e-3, 10.0, allow_nan=False)


@st.composite
def step_functions(draw, min_size=0, max_size=12):
    n = draw(st.integers(min_size, max_size))
    vals = draw(st.lists(values, min_size=n, max_size=n))
    ws = draw(st.lists(weights, min_size=n, max_size=n))
    return StepFunction(vals, ws)


def random_step(rng: np.random.Generator, max_cells: int = 20) -> StepFunction:
    n = int(rng.integers(1, max_cells + 1))
    vals = rng.exponential(1.0, n)
    # repeated values exercise the tie-merging path
    if n > 2 and rng.random() < 0.3:
        vals[1] = vals[0]
    return StepFunction(vals, rng.uniform(0.01, 2.0, n))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_cell():
    return StepFunction([2.0, 1.0], [0.5, 1.0])


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
