"""Random test instances shared by the unit and acceptance tests."""
import numpy as np


def random_psd(rng, m, cond=100.0):
    """Hermitian positive definite matrix with a bounded condition number."""
    q, _ = np.linalg.qr(rng.standard_normal((m, m))
                        + 1j * rng.standard_normal((m, m)))
    eig = np.exp(rng.uniform(0, np.log(cond), m))
    return (q * eig) @ q.conj().T


def random_pencil(rng, m, gap):
    """(R_n, R_y) whose top generalized eigenvalue exceeds the second by
    the factor ``gap``."""
    R_n = random_psd(rng, m, 50.0)
    L = np.linalg.cholesky(R_n)
    q, _ = np.linalg.qr(rng.standard_normal((m, m))
                        + 1j * rng.standard_normal((m, m)))
    lam = np.sort(rng.uniform(1.0, 5.0, m))[::-1]
    lam[0] = lam[1] * gap
    C = (q * lam) @ q.conj().T
    return R_n, L @ C @ L.conj().T


def kkt_mvdr(R, h):
    """MVDR via the KKT system of min w^H R w s.t. h^H w = 1."""
    m = h.size
    A = np.zeros((m + 1, m + 1), dtype=complex)
    A[:m, :m] = R
    A[:m, m] = -h
    A[m, :m] = h.conj()
    b = np.zeros(m + 1, dtype=complex)
    b[m] = 1.0
    return np.linalg.solve(A, b)[:m]
