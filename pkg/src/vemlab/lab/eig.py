"""Symmetric generalized eigenvalues by Cholesky reduction and cyclic Jacobi."""

from __future__ import annotations

import numpy as np

from ..errors import NoConvergence, NotSPD


def jacobi_eigenvalues(C: np.ndarray, tol: float = 1e-12, max_sweeps: int = 50) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending."""
    a = np.array(C, dtype=float)
    n = len(a)
    if n == 0:
        return np.zeros(0)
    a = 0.5 * (a + a.T)
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= tol * scale:
            return np.sort(np.diag(a))
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # rotate rows and columns p, q
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
    off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
    if off <= tol * scale:
        return np.sort(np.diag(a))
    raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps (off-diagonal {off:.3e})")


def generalized_eig_sym(A, B, tol: float = 1e-12, max_sweeps: int = 50) -> np.ndarray:
    """Eigenvalues of A x = λ B x for symmetric A and SPD B, ascending.

    Raises
    ------
    NotSPD
        If the Cholesky factorization of B fails.
    NoConvergence
        If the Jacobi sweeps do not converge.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A and B must be square matrices of equal size")
    try:
        L = np.linalg.cholesky(0.5 * (B + B.T))
    except np.linalg.LinAlgError:
        raise NotSPD("B is not symmetric positive definite") from None
    Linv = np.linalg.inv(L)
    C = Linv @ (0.5 * (A + A.T)) @ Linv.T
    return jacobi_eigenvalues(C, tol, max_sweeps)
