import numpy as np
import pytest

from gwdensity.gwmodel import PolynomialPgf

P1 = [0.0, 0.3, 0.4, 0.2, 0.1]
P2 = [0.0, 0.5, 0.0, 0.3, 0.2]
P3 = [0.1] * 10
P4 = [0.1, 0.5, 0.0, 0.2, 0.1, 0.1]
CRANE = [0.1538, 0.6491, 0.1971]
ROBIN = [0.1036, 0.3551, 0.3448, 0.1553, 0.0366, 0.0044, 0.0002]

TEST_PGFS = {"P1": P1, "P2": P2, "P3": P3, "P4": P4}


@pytest.fixture(params=sorted(TEST_PGFS))
def test_pgf(request):
    return PolynomialPgf(TEST_PGFS[request.param])


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def power_pgf(d):
    p = np.zeros(d + 1)
    p[d] = 1.0
    return PolynomialPgf(p)


def exp_taylor(n):
    """Coefficients (-1)^j / j! of exp(-z)."""
    out = np.empty(n + 1)
    out[0] = 1.0
    for j in range(1, n + 1):
        out[j] = -out[j - 1] / j
    return out


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
