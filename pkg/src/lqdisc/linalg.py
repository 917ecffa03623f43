"""Dense linear-algebra kernels shared by all discretization routines.

Matrices are plain 2-D ``float64`` numpy arrays throughout.  The kernels
here are deliberately small and self-contained: a Pade-13
scaling-and-squaring matrix exponential, a partial-pivoting LU solve that
reports *which* pivot failed, and a couple of symmetry helpers.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import SingularMatrixError, ValidationError

__all__ = [
    "expm",
    "solve_linear",
    "LuFactorization",
    "symmetrize",
    "is_psd",
]

# Pade-13 numerator coefficients (Higham 2005, Table 10.4).
_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)

# 1-norm threshold above which the argument is scaled down by powers of two.
_PADE13_THETA = 5.371920351148152


def _as_matrix(m, name: str = "matrix") -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValidationError(f"{name} contains non-finite entries")
    return a


def expm(m) -> np.ndarray:
    """Matrix exponential via Pade-13 with scaling and squaring.

    The argument is scaled by ``2**-s`` until its 1-norm drops below the
    order-13 threshold, the diagonal Pade approximant is evaluated, and the
    result is squared ``s`` times.

    Parameters
    ----------
    m : (n, n) array_like
        Square matrix with finite entries.

    Returns
    -------
    (n, n) ndarray
    """
    a = _as_matrix(m, "expm argument")
    n, nc = a.shape
    if n != nc:
        raise ValidationError(f"expm argument must be square, got {a.shape}")
    if n == 0:
        return np.zeros((0, 0))

    norm = np.abs(a).sum(axis=0).max() if a.size else 0.0
    squarings = 0
    if norm > _PADE13_THETA:
        squarings = max(0, int(math.ceil(math.log2(norm / _PADE13_THETA))))
        a = a / (2.0 ** squarings)

    b = _PADE13
    ident = np.eye(n)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a2 @ a4
    u = a @ (
        a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
        + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident
    )
    v = (
        a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
        + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident
    )
    r = solve_linear(v - u, v + u)
    for _ in range(squarings):
        r = r @ r
    return r


class LuFactorization:
    """LU factorization with partial pivoting.

    Factor once, solve many times — used for implicit Runge-Kutta stages
    that share a diagonal coefficient.  Raises
    :class:`~lqdisc.errors.SingularMatrixError` naming the offending pivot
    column when the matrix is numerically singular.
    """

    def __init__(self, m, name: str = "matrix"):
        a = _as_matrix(m, name).copy()
        n, nc = a.shape
        if n != nc:
            raise ValidationError(f"{name} must be square, got {a.shape}")
        perm = np.arange(n)
        scale = max(1.0, np.abs(a).max()) if a.size else 1.0
        for k in range(n):
            p = k + int(np.argmax(np.abs(a[k:, k])))
            if abs(a[p, k]) <= 1e-14 * scale:
                raise SingularMatrixError(
                    f"{name} is numerically singular at pivot step {k} "
                    f"(pivot magnitude {abs(a[p, k]):.3e})"
                )
            if p != k:
                a[[k, p]] = a[[p, k]]
                perm[[k, p]] = perm[[p, k]]
            a[k + 1:, k] /= a[k, k]
            a[k + 1:, k + 1:] -= np.outer(a[k + 1:, k], a[k, k + 1:])
        self._lu = a
        self._perm = perm
        self._n = n

    def solve(self, rhs) -> np.ndarray:
        b = np.asarray(rhs, dtype=float)
        vector = b.ndim == 1
        if vector:
            b = b[:, None]
        if b.shape[0] != self._n:
            raise ValidationError(
                f"right-hand side has {b.shape[0]} rows, expected {self._n}"
            )
        x = b[self._perm].copy()
        lu = self._lu
        for k in range(self._n):          # forward: L y = P b
            x[k + 1:] -= np.outer(lu[k + 1:, k], x[k])
        for k in range(self._n - 1, -1, -1):  # backward: U x = y
            x[k] /= lu[k, k]
            if k:
                x[:k] -= np.outer(lu[:k, k], x[k])
        return x[:, 0] if vector else x


def solve_linear(a, rhs, name: str = "matrix") -> np.ndarray:
    """Solve ``a @ x = rhs`` by partial-pivoting LU."""
    return LuFactorization(a, name).solve(rhs)


def symmetrize(m) -> np.ndarray:
    """Return ``(m + m.T) / 2``."""
    a = np.asarray(m, dtype=float)
    return 0.5 * (a + a.T)


def is_psd(m, tol: float = 1e-10) -> bool:
    """Check positive semidefiniteness of a (nearly) symmetric matrix.

    True iff the minimum eigenvalue of the symmetrized input is at least
    ``-tol * scale`` where ``scale = max(1, largest |eigenvalue|)``.
    """
    a = symmetrize(_as_matrix(m, "is_psd argument"))
    if a.shape[0] == 0:
        return True
    eigs = np.linalg.eigvalsh(a)
    scale = max(1.0, float(np.abs(eigs).max()))
    return bool(eigs.min() >= -tol * scale)
