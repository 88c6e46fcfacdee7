import numpy as np
import pytest
import scipy.sparse as sp

from chebfd.linalg import SparseMatrix


def random_hermitian(n, density=0.2, complex_=False, seed=0):
    rng = np.random.default_rng(seed)
    M = sp.random(n, n, density=density, random_state=rng, format="csr")
    if complex_:
        M = M + 1j * sp.random(n, n, density=density, random_state=rng, format="csr")
    M = M + M.conj().T
    return SparseMatrix.from_scipy(M)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(params=[False, True], ids=["real", "complex"])
def herm(request):
    return random_hermitian(60, complex_=request.param, seed=7)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if rep.when == "call":
                lines += [v for k, v in getattr(rep, "user_properties", []) if k == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
