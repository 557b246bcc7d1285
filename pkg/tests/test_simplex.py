import numpy as np
import pytest
from scipy.optimize import linprog

from latgcb import DomainError
from latgcb.simplex import TransportSimplex


def lp_value(a, b, C):
    m, n = C.shape
    A = np.zeros((m + n, m * n))
    for i in range(m):
        A[i, i * n:(i + 1) * n] = 1
    for j in range(n):
        A[m + j, j::n] = 1
    return linprog(C.ravel(), A_eq=A, b_eq=np.r_[a, b], bounds=(0, None), method="highs").fun


def test_doc_example():
    s = TransportSimplex([0.8, 0.2], [0.5, 0.5])
    val, X, u, v = s.solve(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert val == pytest.approx(0.3, abs=1e-15)
    assert np.allclose(X.sum(1), [0.8, 0.2]) and np.allclose(X.sum(0), [0.5, 0.5])


def test_rejects_bad_marginals():
    with pytest.raises(DomainError):
        TransportSimplex([0.5, 0.0, 0.5], [1.0])
    with pytest.raises(DomainError):
        TransportSimplex([0.5, 0.5], [0.7])


def test_matches_highs_and_dual_certificate(rng):
    for _ in range(60):
        m, n = rng.integers(1, 9, size=2)
        a, b = rng.dirichlet(np.ones(m)), rng.dirichlet(np.ones(n))
        C = rng.integers(0, 4, size=(m, n)).astype(float)
        val, X, u, v = TransportSimplex(a, b).solve(C)
        assert val == pytest.approx(lp_value(a, b, C), abs=1e-10)
        assert np.all(X >= -1e-12)
        assert np.all(u[:, None] + v[None, :] <= C + 1e-9)
        assert a @ u + b @ v == pytest.approx(val, abs=1e-10)


def test_warm_start_reuses_basis(rng):
    a, b = rng.dirichlet(np.ones(6)), rng.dirichlet(np.ones(6))
    s = TransportSimplex(a, b)
    for _ in range(10):
        C = rng.random((6, 6))
        assert s.solve(C)[0] == pytest.approx(lp_value(a, b, C), abs=1e-10)
