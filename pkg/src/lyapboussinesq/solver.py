"""Solvers for the generalized Lyapunov equation ``W X + X A = C``.

Two independent routes are provided.  The production route is a
contraction fixed-point iteration that splits the operator around
``I/2``; it converges whenever ``q = ||W - I/2|| + ||A - I/2|| < 1`` and
returns a certificate.  The oracle route vectorizes the equation with
Kronecker products and solves the dense system by Gaussian elimination
with partial pivoting.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import (CapExceededError, ContractionError, ConvergenceError,
                     SingularOperatorError)
from .grid import GridSpec
from .operators import (build_matrices, deviation_from_half_identity,
                        generalized_apply, inf_norm, _check_square)

KRONECKER_CAP = 33
SINGULAR_RTOL = 1e-12


class Method(str, enum.Enum):
    FIXED_POINT = "fixed_point"
    KRONECKER = "kronecker"


@dataclass(frozen=True)
class SolverOptions:
    method: Method = Method.FIXED_POINT
    tol: float = 1e-12
    max_iter: int = 200
    right_transpose: bool = False

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter}")


@dataclass(frozen=True)
class SolveCertificate:
    iterations: int
    contraction_factor: float
    residual_norm: float
    method_used: Method
    residual_history: tuple = ()


def residual(W, A, X, C, right_transpose=False) -> np.ndarray:
    return generalized_apply(W, A, X, right_transpose) - C


def iteration_bound(q: float, tol: float, c_norm: float) -> int:
    """Iterations after which ``q**k * ||C||`` drops below ``tol``."""
    if c_norm <= tol or q == 0.0:
        return 1
    return math.ceil(math.log(tol / c_norm) / math.log(q)) + 1


def solve_fixed_point(W, A, C, opts: SolverOptions = SolverOptions(), apply=None):
    """Solve ``W X + X A(^T) = C`` by the iteration
    ``X <- C - (W - I/2) X - X (A - I/2)(^T)``, i.e. ``X <- X - r(X)``.

    ``apply``, if given, evaluates ``X -> W X + X A(^T)`` in place of the
    dense products (the stepper passes the split form that keeps constants
    exact).  Returns ``(X, certificate)``; ``iterations`` counts residual
    evaluations, so an exactly identity operator reports one iteration.

    Raises
    ------
    ContractionError
        If ``q >= 1``.
    ConvergenceError
        If ``opts.max_iter`` residual evaluations do not reach ``opts.tol``.
    """
    W = np.asarray(W, dtype=float)
    A = np.asarray(A, dtype=float)
    C = np.asarray(C, dtype=float)
    _check_square(W, A, C)
    q = deviation_from_half_identity(W, A)
    if not q < 1.0:
        raise ContractionError(q)
    rt = opts.right_transpose
    X = C.copy()
    history = []
    for k in range(1, opts.max_iter + 1):
        r = residual(W, A, X, C, rt) if apply is None else apply(X) - C
        rnorm = inf_norm(r)
        history.append(rnorm)
        if not math.isfinite(rnorm):
            break
        if rnorm <= opts.tol:
            cert = SolveCertificate(k, q, rnorm, Method.FIXED_POINT, tuple(history))
            return X, cert
        X = X - r
    raise ConvergenceError(
        f"fixed-point solve did not reach tol={opts.tol:.1e} in {opts.max_iter} "
        f"iterations (q={q:.3g}, last residual {history[-1]:.3e})"
    )


def kronecker_matrix(W, A, right_transpose=False) -> np.ndarray:
    """Matrix of ``X -> W X + X A(^T)`` acting on column-major ``vec(X)``."""
    n = W.shape[0]
    eye = np.eye(n)
    right = A if right_transpose else A.T
    return np.kron(eye, W) + np.kron(right, eye)


def lu_partial_pivot(K, rtol=SINGULAR_RTOL):
    """In-place-free LU factorization ``P K = L U`` with row pivoting.

    Returns ``(LU, perm, pivots)`` where ``LU`` stores the unit lower factor
    below the diagonal and ``U`` on and above it, ``perm`` is the row
    permutation and ``pivots`` the diagonal of ``U``.  Raises
    ``SingularOperatorError`` on the first pivot with
    ``|pivot| < rtol * max|K|``.
    """
    LU = np.array(K, dtype=float, copy=True)
    n = LU.shape[0]
    threshold = rtol * (np.abs(LU).max() if LU.size else 0.0)
    perm = np.arange(n)
    for k in range(n):
        p = k + int(np.argmax(np.abs(LU[k:, k])))
        if abs(LU[p, k]) < threshold or LU[p, k] == 0.0:
            raise SingularOperatorError(abs(LU[p, k]), threshold, k)
        if p != k:
            LU[[k, p]] = LU[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        LU[k + 1:, k] /= LU[k, k]
        LU[k + 1:, k + 1:] -= np.outer(LU[k + 1:, k], LU[k, k + 1:])
    return LU, perm, np.diag(LU).copy()


def lu_solve(LU, perm, b):
    n = LU.shape[0]
    y = np.asarray(b, dtype=float)[perm].copy()
    for i in range(1, n):
        y[i] -= LU[i, :i] @ y[:i]
    for i in range(n - 1, -1, -1):
        y[i] = (y[i] - LU[i, i + 1:] @ y[i + 1:]) / LU[i, i]
    return y


def _check_cap(n, cap):
    if n > cap:
        raise CapExceededError(
            f"Kronecker system of side {n} exceeds the cap {cap} "
            f"((J+1)^2 = {n * n} unknowns)"
        )


def solve_kronecker(W, A, C, right_transpose=False, cap=KRONECKER_CAP,
                    rtol=SINGULAR_RTOL):
    """Direct solve of ``W X + X A(^T) = C`` through the vectorized system."""
    W = np.asarray(W, dtype=float)
    A = np.asarray(A, dtype=float)
    C = np.asarray(C, dtype=float)
    _check_square(W, A, C)
    n = W.shape[0]
    _check_cap(n, cap)
    K = kronecker_matrix(W, A, right_transpose)
    LU, perm, _ = lu_partial_pivot(K, rtol)
    x = lu_solve(LU, perm, C.reshape(-1, order="F"))
    return x.reshape((n, n), order="F")


def solve(W, A, C, opts: SolverOptions = SolverOptions(), apply=None):
    """Dispatch on ``opts.method``; always returns ``(X, certificate)``.

    ``apply`` is forwarded to the fixed-point route only.
    """
    if opts.method is Method.FIXED_POINT:
        return solve_fixed_point(W, A, C, opts, apply)
    X = solve_kronecker(W, A, C, opts.right_transpose)
    rnorm = inf_norm(residual(W, A, X, C, opts.right_transpose))
    q = deviation_from_half_identity(np.asarray(W), np.asarray(A))
    return X, SolveCertificate(1, q, rnorm, Method.KRONECKER, (rnorm,))


def solvability_check(grid: GridSpec, right_transpose=False, cap=KRONECKER_CAP,
                      rtol=SINGULAR_RTOL):
    """Numerical check that ``X -> W X + X A(^T)`` has a trivial kernel.

    Returns ``(invertible, min_pivot)`` where ``min_pivot`` is the smallest
    absolute pivot met by the elimination (the failing one, if any).
    """
    _check_cap(grid.J + 1, cap)
    mats = build_matrices(grid, right_transpose)
    K = kronecker_matrix(mats.W, mats.A, right_transpose)
    try:
        _, _, pivots = lu_partial_pivot(K, rtol)
    except SingularOperatorError as err:
        return False, float(err.pivot)
    return True, float(np.abs(pivots).min())
