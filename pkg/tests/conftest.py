import json
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from dyadic_diffusion.kernels import from_lambda

DATA = Path(__file__).parent / "data"


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "VERDICTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def oracles():
    return json.loads((DATA / "oracles.json").read_text())


def random_kernel(rng: np.random.Generator, window=(-12, 12), hard_tail: bool = False):
    """Kernel with a random nonincreasing eigenvalue sequence in [0, 1]."""
    lo, hi = window
    lam = np.sort(rng.uniform(0.0, 1.0, hi - lo + 1))[::-1]
    if hard_tail:
        lam[0] = 1.0
    return from_lambda(window, lam, strict=True)


@st.composite
def kernels(draw, min_lo=-14, max_hi=14):
    lo = draw(st.integers(min_lo, -1))
    hi = draw(st.integers(0, max_hi))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_kernel(np.random.default_rng(seed), (lo, hi))
