import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lyapboussinesq.errors import (CapExceededError, ContractionError, ConvergenceError,
                                   SingularOperatorError)
from lyapboussinesq.grid import build_grid, build_grid_explicit
from lyapboussinesq.operators import build_matrices, inf_norm
from lyapboussinesq.solver import (Method, SolverOptions, iteration_bound, kronecker_matrix,
                                   lu_partial_pivot, lu_solve, residual, solvability_check,
                                   solve, solve_fixed_point, solve_kronecker)

KRON = SolverOptions(Method.KRONECKER)


def test_identity_pair_returns_C_in_one_iteration(rng):
    half = 0.5 * np.eye(4)
    C = rng.standard_normal((4, 4))
    X, cert = solve_fixed_point(half, half, C)
    np.testing.assert_array_equal(X, C)
    assert cert.iterations == 1
    assert cert.contraction_factor == 0.0
    assert cert.method_used is Method.FIXED_POINT


def test_diagonal_closed_form(rng):
    w = np.array([0.45, 0.5, 0.55, 0.6])
    a = np.array([0.52, 0.48, 0.5, 0.47])
    C = rng.uniform(-1, 1, (4, 4))
    X, cert = solve_fixed_point(np.diag(w), np.diag(a), C)
    np.testing.assert_allclose(X, C / (w[:, None] + a[None, :]), rtol=0, atol=1e-12)
    assert cert.residual_norm <= 1e-12


def test_kronecker_hand_case():
    W, A = np.diag([1.0, 2.0]), np.diag([1.0, 3.0])
    C = np.array([[2.0, 4.0], [6.0, 10.0]])
    np.testing.assert_allclose(solve_kronecker(W, A, C), [[1.0, 1.0], [2.0, 2.0]], atol=1e-15)
    # this pair is too far from I/2 for the iteration
    with pytest.raises(ContractionError) as info:
        solve_fixed_point(W, A, C)
    assert info.value.q == pytest.approx(1.5 + 2.5)


def test_kronecker_matrix_column_major(rng):
    W, A, X = (rng.standard_normal((3, 3)) for _ in range(3))
    for rt in (False, True):
        K = kronecker_matrix(W, A, rt)
        lhs = W @ X + X @ (A.T if rt else A)
        np.testing.assert_allclose(K @ X.reshape(-1, order="F"), lhs.reshape(-1, order="F"),
                                   atol=1e-13)


@pytest.mark.parametrize("rt", [False, True])
def test_random_dominant_system(rng, rt):
    n = 5
    W = 0.5 * np.eye(n) + rng.uniform(-0.04, 0.04, (n, n))
    A = 0.5 * np.eye(n) + rng.uniform(-0.04, 0.04, (n, n))
    C = rng.standard_normal((n, n))
    X, cert = solve_fixed_point(W, A, C, SolverOptions(right_transpose=rt))
    assert inf_norm(residual(W, A, X, C, rt)) <= 1e-10
    Xk = solve_kronecker(W, A, C, rt)
    assert np.abs(X - Xk).max() <= 1e-10
    hist = np.array(cert.residual_history)
    assert np.all(np.diff(hist) <= 0)
    assert cert.iterations <= iteration_bound(cert.contraction_factor, 1e-12, inf_norm(C)) + 1


def test_solve_dispatch(rng, grid8):
    m = build_matrices(grid8)
    C = rng.standard_normal((9, 9))
    X1, c1 = solve(m.W, m.A, C)
    X2, c2 = solve(m.W, m.A, C, KRON)
    assert c2.method_used is Method.KRONECKER and c2.iterations == 1
    assert np.abs(X1 - X2).max() <= 1e-10


def test_lu_matches_numpy(rng):
    K = rng.standard_normal((12, 12))
    b = rng.standard_normal(12)
    LU, perm, piv = lu_partial_pivot(K)
    np.testing.assert_allclose(lu_solve(LU, perm, b), np.linalg.solve(K, b), rtol=1e-10)
    assert np.prod(np.abs(piv)) == pytest.approx(abs(np.linalg.det(K)), rel=1e-10)


def test_lu_singular():
    K = np.array([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(SingularOperatorError) as info:
        lu_partial_pivot(K)
    assert info.value.index == 1


def test_cap_exceeded():
    n = 34
    with pytest.raises(CapExceededError):
        solve_kronecker(np.eye(n), np.eye(n), np.eye(n))
    with pytest.raises(CapExceededError):
        solvability_check(build_grid(0, 1, 40))


def test_convergence_error():
    W = np.diag([0.9, 0.5])
    A = 0.5 * np.eye(2)
    with pytest.raises(ConvergenceError):
        solve_fixed_point(W, A, np.ones((2, 2)), SolverOptions(max_iter=3))


def test_options_validation():
    with pytest.raises(ValueError):
        SolverOptions(tol=0.0)
    with pytest.raises(ValueError):
        SolverOptions(max_iter=0)


def test_iteration_bound():
    assert iteration_bound(0.0, 1e-12, 1.0) == 1
    assert iteration_bound(0.5, 1e-3, 1e-4) == 1
    # 0.1**k <= 1e-12 first at k = 12, plus the initial evaluation
    assert iteration_bound(0.1, 1e-12, 1.0) == 13


def test_solvability_explicit_weight():
    ok, pivot = solvability_check(build_grid(0, 1, 6, 0.0))
    assert ok and pivot == pytest.approx(1.0)


@pytest.mark.parametrize("J", [2, 4, 8])
def test_solvability_quarter_weight(J):
    for rt in (False, True):
        ok, pivot = solvability_check(build_grid(0, 1, J, 0.25), rt)
        assert ok and pivot > 0.5


def test_unit_courant_number_is_not_contractive():
    # l = h gives sigma = 1 and pushes W far from I/2
    g = build_grid_explicit(0, 1, 10, 0.25, 0.1)
    assert g.sigma == pytest.approx(1.0)
    m = build_matrices(g)
    with pytest.raises(ContractionError):
        solve_fixed_point(m.W, m.A, np.ones((11, 11)))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 8), st.floats(0.0, 0.5), st.integers(0, 2**31 - 1), st.booleans())
def test_fixed_point_agrees_with_oracle(J, alpha, seed, rt):
    m = build_matrices(build_grid(0, 1, J, alpha, 1, 1), rt)
    C = np.random.default_rng(seed).uniform(-1, 1, (J + 1, J + 1))
    try:
        X, _ = solve_fixed_point(m.W, m.A, C, SolverOptions(right_transpose=rt))
    except ContractionError:
        return
    assert np.abs(X - solve_kronecker(m.W, m.A, C, rt)).max() <= 1e-10
