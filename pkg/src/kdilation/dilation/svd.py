"""Singular values of stacks of small dense matrices by one-sided Jacobi rotations."""

import numpy as np

JACOBI_TOL = 1e-15
MAX_SWEEPS = 60


def singular_values(A: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = MAX_SWEEPS) -> np.ndarray:
    """Singular values of every matrix in an (N, r, c) stack, shape (N, min(r, c)), non-increasing.

    Columns are rotated pairwise until they are mutually orthogonal; the
    column norms are then the singular values. A 2-d input is treated as a
    stack of one.
    """
    A = np.asarray(A, dtype=float)
    single = A.ndim == 2
    if single:
        A = A[None]
    if A.shape[2] > A.shape[1]:
        A = np.swapaxes(A, 1, 2)
    M = A.copy()
    cols = M.shape[2]

    for _ in range(max_sweeps):
        worst = 0.0
        for i in range(cols - 1):
            for j in range(i + 1, cols):
                ai, aj = M[:, :, i], M[:, :, j]
                alpha = np.einsum("nr,nr->n", ai, ai)
                beta = np.einsum("nr,nr->n", aj, aj)
                gamma = np.einsum("nr,nr->n", ai, aj)
                scale = np.sqrt(alpha * beta)
                off = np.divide(np.abs(gamma), scale, out=np.zeros_like(gamma), where=scale > 0)
                worst = max(worst, float(off.max(initial=0.0)))
                rotate = off > tol
                if not rotate.any():
                    continue
                g = np.where(rotate, gamma, 1.0)
                zeta = (beta - alpha) / (2.0 * g)
                t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                t = np.where(rotate, t, 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                new_i = c[:, None] * ai - s[:, None] * aj
                new_j = s[:, None] * ai + c[:, None] * aj
                M[:, :, i] = new_i
                M[:, :, j] = new_j
        if worst <= tol:
            break

    s = -np.sort(-np.linalg.norm(M, axis=1), axis=1)
    return s[0] if single else s


def padded_singular_values(J: np.ndarray) -> np.ndarray:
    """Singular values of an (N, out, in) stack padded with zeros to `in` columns."""
    s = singular_values(J)
    width = J.shape[2]
    if s.shape[1] < width:
        s = np.concatenate([s, np.zeros((s.shape[0], width - s.shape[1]))], axis=1)
    return s
