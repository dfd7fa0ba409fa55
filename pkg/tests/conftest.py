import numpy as np
import pytest

from qcbench.core import ChoiMatrix, haar_unitary
from qcbench.gatelab import PAULI


def choi_by_definition(kraus, d):
    """Oracle: entry ((i,j),(k,l)) = <j| Phi(|i><k|) |l>, built element by element."""
    m = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for k in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, k] = 1.0
            out = sum(a @ e @ a.conj().T for a in kraus)
            for j in range(d):
                for l in range(d):
                    m[i * d + j, k * d + l] = out[j, l]
    return m


def random_channel(rng, d, n_kraus=3):
    """Random CPTP map as a Choi matrix, from a Haar isometry."""
    u = haar_unitary(d * n_kraus, rng)[:, :d]
    kraus = [u[r * d : (r + 1) * d] for r in range(n_kraus)]
    return ChoiMatrix(choi_by_definition(kraus, d)), kraus


def fibonacci_sphere(n):
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    phi = np.pi * (1 + 5**0.5) * i
    r = np.sqrt(1 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def bloch_states(points):
    return 0.5 * (np.eye(2) + np.einsum("na,abc->nbc", points, np.stack([PAULI["x"], PAULI["y"], PAULI["z"]])))



def product_grid_deviation(site_kraus, observables, n_points=50):
    """Brute force of max |sum_i Tr[(rho_i - Phi_i(rho_i)) X_i]| over all product grid states."""
    rhos = bloch_states(fibonacci_sphere(n_points))
    total = np.zeros(())
    for kraus, x in zip(site_kraus, observables):
        out = sum(np.einsum("ab,nbc,dc->nad", k, rhos, k.conj()) for k in kraus)
        f = np.einsum("nab,ba->n", rhos - out, x).real
        total = np.add.outer(total, f)
    return float(np.max(np.abs(total)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
