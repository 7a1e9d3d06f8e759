import numpy as np
import pytest


def random_hermitian(dim, rng):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return a + a.conj().T


def random_state(dim, rng, support=None):
    """Random full-rank density matrix; ``support`` restricts it to a subset of basis indices."""
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    if support is not None:
        mask = np.zeros(dim, dtype=bool)
        mask[support] = True
        a[~mask, :] = 0
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
