import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sluggish import TrainerPolicy  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


def random_policy(rng, n_states=None, d_max=6, sparsity=0.4):
    """Random trainer policy; some entries are zeroed to create structure."""
    n = n_states or int(rng.integers(1, 4))
    P = rng.random((n, n))
    P[rng.random((n, n)) < sparsity] = 0.0
    for i in range(n):
        if P[i].sum() == 0.0:
            P[i, rng.integers(n)] = 1.0
    P /= P.sum(axis=1, keepdims=True)
    d = rng.integers(0, d_max + 1, size=n)
    return TrainerPolicy(transitions=P, intensity=d)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
