import numpy as np
import pytest

from equslab.diffusion import build_schedule


def dense_matrix(A):
    """Explicit m x n matrix of an operator, built column by column."""
    n = A.n
    cols = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        cols.append(A.apply(e.reshape(A.in_shape)))
    return np.stack(cols, axis=1)


def rel_err(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


@pytest.fixture(scope="session")
def sched():
    return build_schedule()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


#: criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def record(number, title, passed, detail=""):
    ACCEPTANCE[number] = (title, bool(passed), detail)
    print(f"[criterion {number:2d}] {'PASS' if passed else 'FAIL'}  {title}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"[criterion {number:2d}] {'PASS' if passed else 'FAIL'}  {title}  {detail}")
