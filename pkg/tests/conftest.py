import numpy as np
import pytest
from hypothesis import strategies as st

from pdom.quadmodel import build_dense


def random_spd(rng, dim, cond_max=1e3):
    """SPD matrix with eigenvalues spread log-uniformly over [1, cond]."""
    U, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    cond = np.exp(rng.uniform(0, np.log(cond_max)))
    eig = np.exp(rng.uniform(0, np.log(cond), size=dim))
    eig[0], eig[-1] = 1.0, cond
    Q = (U * eig) @ U.T
    return 0.5 * (Q + Q.T)


def random_model(rng, dim):
    return build_dense(random_spd(rng, dim), rng.standard_normal(dim))


seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=1, max_value=10)


@pytest.fixture
def toy():
    """q(x) = 2 x1^2 + 0.5 x2^2 - 4 x1 - x2, minimized at (1, 1)."""
    return build_dense(np.diag([4.0, 1.0]), np.array([-4.0, -1.0]))


# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LOG = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LOG:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LOG, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
