"""Independent reference computations.

Everything here is deliberately naive (enumeration, finite differences,
matrix exponentials) and never calls the code paths it is used to check.
"""

import itertools

import numpy as np
import scipy.linalg


def brute_force_laman(n: int, edges) -> bool:
    """Edge count plus full subset enumeration, all k from 2 to n."""
    edges = list(edges)
    if len(edges) != 2 * n - 3:
        return False
    for k in range(2, n + 1):
        for subset in itertools.combinations(range(n), k):
            s = set(subset)
            spanned = sum(1 for i, j in edges if i in s and j in s)
            if spanned > 2 * k - 3:
                return False
    return True


def central_difference_jacobian(f, x0, h: float = 1e-6) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    f0 = np.asarray(f(x0), dtype=float)
    J = np.zeros((f0.size, x0.size))
    for c in range(x0.size):
        step = np.zeros(x0.size)
        step[c] = h
        J[:, c] = (np.asarray(f(x0 + step)) - np.asarray(f(x0 - step))) / (2.0 * h)
    return J


def central_difference_gradient(f, x0, h: float = 1e-6) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    g = np.zeros(x0.size)
    for c in range(x0.size):
        step = np.zeros(x0.size)
        step[c] = h
        g[c] = (f(x0 + step) - f(x0 - step)) / (2.0 * h)
    return g


def gram_schmidt(columns, tol: float = 1e-12) -> np.ndarray:
    """Classic Gram-Schmidt, dropping dependent columns."""
    basis = []
    for col in np.asarray(columns, dtype=float).T:
        v = col.copy()
        for b in basis:
            v -= (b @ col) * b
        nrm = np.linalg.norm(v)
        if nrm > tol:
            basis.append(v / nrm)
    return np.array(basis).T if basis else np.zeros((len(columns), 0))


def affine_ode_solution(A, b, x0, t: float) -> np.ndarray:
    """Exact solution of x' = A x + b at time t via an augmented exponential
    (valid for singular A too)."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    n = A.shape[0]
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = A
    M[:n, n] = b
    E = scipy.linalg.expm(M * t)
    return E[:n, :n] @ np.asarray(x0, dtype=float).ravel() + E[:n, n]
