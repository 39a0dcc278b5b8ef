import numpy as np
import pytest

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
ID = np.eye(2, dtype=complex)
LETTERS = {"I": ID, "X": SX, "Y": SY, "Z": SZ}


def dense_label(label):
    """Kronecker product with character k acting on site k (site 0 = last factor)."""
    m = np.ones((1, 1), dtype=complex)
    for ch in reversed(label):
        m = np.kron(m, LETTERS[ch])
    return m


def dense_expr(expr):
    dim = 1 << expr.n_sites
    out = np.zeros((dim, dim), dtype=complex)
    for c, w in expr.terms:
        out += c * dense_label(w.label)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
