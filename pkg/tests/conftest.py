import numpy as np
import pytest

from morcert import LtiSystem


def random_stable(rng, n, m=1, p=1, spread=10.0):
    """Random stable system with eigenvalues in ``[-spread, -1]`` and a mildly nonnormal A."""
    lam = -np.logspace(0, np.log10(spread), n)
    Q1, _ = np.linalg.qr(rng.standard_normal((n, n)))
    Q2, _ = np.linalg.qr(rng.standard_normal((n, n)))
    s = np.logspace(0, 0.5, n)
    T = (Q1 * s) @ Q2
    A = (T * lam) @ np.linalg.inv(T)
    return LtiSystem(A, rng.standard_normal((n, m)), rng.standard_normal((n, p)))


@pytest.fixture
def scalar_sys():
    return LtiSystem([[-1.0]], [[1.0]], [[1.0]])


@pytest.fixture
def diag_sys():
    return LtiSystem(np.diag([-1.0, -2.0]), [[1.0], [1.0]], [[1.0], [1.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


ACCEPTANCE = {}


def record_acceptance(number, title, ok, detail):
    """Remember one acceptance outcome; printed in the terminal summary."""
    ACCEPTANCE[number] = f"acceptance {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    print(ACCEPTANCE[number])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
