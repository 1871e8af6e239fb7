import numpy as np
import pytest
from hypothesis import strategies as st


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_sample(rng, n, t, k=None):
    """T x N matrix of random labels in 1..k."""
    k = n if k is None else k
    return rng.integers(1, k + 1, size=(t, n))


def labels(n_min=1, n_max=8, k_max=5):
    return st.integers(n_min, n_max).flatmap(
        lambda n: st.lists(st.integers(1, k_max), min_size=n, max_size=n)
    )


ACCEPTANCE_LINES = {}


def record(criterion: int, passed: bool, detail: str):
    """Store a one-line verdict printed at the end of the run."""
    ACCEPTANCE_LINES[criterion] = f"criterion {criterion:2d}: {'PASS' if passed else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
