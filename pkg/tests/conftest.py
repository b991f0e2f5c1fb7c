import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

sys.path.insert(0, os.path.dirname(__file__))

from teamrelax import Instance  # noqa: E402

settings.register_profile("repo", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


def dirichlet(rng, n, size=None):
    return rng.dirichlet(np.ones(n), size=size)


@st.composite
def small_instances(draw, max_alphabet=3, separable=False):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    ns, nx, ny, nt = (draw(st.integers(2, max_alphabet)) for _ in range(4))
    p_s = dirichlet(rng, ns)
    channel = dirichlet(rng, ny, size=nx)
    if separable:
        from teamrelax import SeparableCost
        return Instance(p_s, channel, separable=SeparableCost(rng.random((ns, nt)), rng.random(nx)))
    return Instance(p_s, channel, cost=rng.random((ns, nx, ny, nt)))


@st.composite
def seeds(draw):
    return np.random.default_rng(draw(st.integers(0, 2**32 - 1)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = {}


def record(number, ok, detail):
    """Remember one acceptance verdict; the summary hook prints them in order."""
    ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE_LINES[number])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
