"""Scheme coefficients, structural matrices and Lyapunov-type operators.

The Neumann condition is imposed through ghost nodes ``U[-1] = U[1]`` and
``U[J+1] = U[J-1]``.  Eliminating the ghosts doubles the first
super-diagonal entry of row 0 and the last sub-diagonal entry of row J in
every three-point stencil matrix, which is why ``A``, ``B`` and ``R`` are
not symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .grid import GridSpec


@dataclass(frozen=True)
class CoefficientSet:
    a1: float
    a2: float
    b1: float
    b2: float
    c1: float
    c2: float
    omega: float
    omega1: float
    omega1_bar: float
    omega2: float


@dataclass(frozen=True)
class SchemeMatrices:
    """The matrices ``A, B, R`` and the reduced-system matrices ``W, Btilde``.

    ``right_transpose`` selects how the right factor of a generalized
    Lyapunov operator acts: ``P X + X Q`` when false, ``P X + X Q^T`` when
    true.  Only the transposed form applies the ghost reflection along y.
    """

    A: np.ndarray
    B: np.ndarray
    R: np.ndarray
    W: np.ndarray
    Btilde: np.ndarray
    coeffs: CoefficientSet
    right_transpose: bool = False

    @property
    def size(self) -> int:
        return self.A.shape[0]

    # With the ghost doubling, A = I/2 + a2 R and B = I + b2 R hold exactly.
    # Applying the operators in that split form keeps R's exact zero row sums
    # out of reach of rounding, so constants are mapped to themselves without
    # the ulp-level seed that the high modes would otherwise amplify.
    def _sandwich(self, X):
        R = self.R
        return R @ X + X @ (R.T if self.right_transpose else R)

    def apply_WA(self, X):
        """``W X + X A(^T)`` evaluated as ``X + a2 (R X + X R(^T)) + 2 a2 c2 R R X``."""
        c = self.coeffs
        X = np.asarray(X, dtype=float)
        return X + c.a2 * self._sandwich(X) + (2.0 * c.a2 * c.c2) * (self.R @ (self.R @ X))

    def apply_BB(self, X):
        """``Bt X + X B(^T)`` evaluated as ``2 X + b2 (R X + X R(^T)) - 2 a2 c1 R R X``."""
        c = self.coeffs
        X = np.asarray(X, dtype=float)
        return 2.0 * X + c.b2 * self._sandwich(X) - (2.0 * c.a2 * c.c1) * (self.R @ (self.R @ X))


def coefficient_set(alpha: float, sigma: float, delta: float) -> CoefficientSet:
    """Coefficients as functions of the weight and the two mesh ratios."""
    a1 = 0.5 + 2.0 * alpha * sigma
    a2 = -alpha * sigma
    b1 = 1.0 - 2.0 * (1.0 - 2.0 * alpha) * sigma
    b2 = (1.0 - 2.0 * alpha) * sigma
    c1 = (1.0 - 2.0 * alpha) * delta
    c2 = alpha * delta
    omega = 2.0 * a2 * c2
    omega1 = a1 + 6.0 * omega
    return CoefficientSet(
        a1=a1, a2=a2, b1=b1, b2=b2, c1=c1, c2=c2,
        omega=omega, omega1=omega1, omega1_bar=omega1 + omega,
        omega2=a2 - 4.0 * omega,
    )


def coefficients(grid: GridSpec) -> CoefficientSet:
    return coefficient_set(grid.alpha, grid.sigma, grid.delta)


def neumann_tridiagonal(n: int, diag: float, off: float) -> np.ndarray:
    """``n x n`` tridiagonal stencil matrix with ghost-doubled corners."""
    if n < 3:
        raise DimensionError(f"stencil matrix needs at least 3 nodes, got {n}")
    M = np.zeros((n, n))
    i = np.arange(n)
    M[i, i] = diag
    M[i[:-1], i[:-1] + 1] = off
    M[i[1:], i[1:] - 1] = off
    M[0, 1] = 2.0 * off
    M[-1, -2] = 2.0 * off
    return M


def build_matrices(grid: GridSpec, right_transpose: bool = False) -> SchemeMatrices:
    c = coefficients(grid)
    n = grid.J + 1
    A = neumann_tridiagonal(n, c.a1, c.a2)
    B = neumann_tridiagonal(n, c.b1, c.b2)
    R = neumann_tridiagonal(n, -2.0, 1.0)
    R2 = R @ R
    W = A + 2.0 * c.a2 * c.c2 * R2
    Btilde = B - 2.0 * c.a2 * c.c1 * R2
    mats = SchemeMatrices(A=A, B=B, R=R, W=W, Btilde=Btilde, coeffs=c,
                          right_transpose=bool(right_transpose))
    for M in (A, B, R, W, Btilde):
        M.setflags(write=False)
    return mats


def _check_square(*mats):
    n = mats[0].shape
    for M in mats:
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape != n:
            raise DimensionError(
                "operands must be square and of equal size, got "
                + ", ".join(str(X.shape) for X in mats)
            )


def lyapunov_apply(Q, X):
    """``Q X + X Q``."""
    Q = np.asarray(Q, dtype=float)
    X = np.asarray(X, dtype=float)
    _check_square(Q, X)
    return Q @ X + X @ Q


def generalized_apply(P, Q, X, right_transpose=False):
    """``P X + X Q`` or, with ``right_transpose``, ``P X + X Q^T``."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    X = np.asarray(X, dtype=float)
    _check_square(P, Q, X)
    return P @ X + X @ (Q.T if right_transpose else Q)


def inf_norm(X) -> float:
    """Operator infinity norm: maximum absolute row sum."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.size == 0:
        return 0.0
    return float(np.abs(X).sum(axis=1).max())


def max_norm(X) -> float:
    """Largest absolute entry; the sup norm of a field seen as a grid function."""
    X = np.asarray(X, dtype=float)
    return float(np.abs(X).max()) if X.size else 0.0


def deviation_from_half_identity(W, A) -> float:
    """``||W - I/2|| + ||A - I/2||``, the fixed-point contraction factor."""
    half = 0.5 * np.eye(W.shape[0])
    return inf_norm(W - half) + inf_norm(A - half)


def lyapunov_deviation(grid: GridSpec) -> float:
    """Contraction factor ``q`` of the per-step operator on ``grid``."""
    mats = build_matrices(grid)
    return deviation_from_half_identity(mats.W, mats.A)
