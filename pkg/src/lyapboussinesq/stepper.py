"""Order-reduced time stepping.

With ``v = u_xx + u^2`` the equation ``u_tt = lap(u) + u_xxxx + (u^2)_xx``
becomes the pair ``u_tt = lap(u) + v_xx``, ``v = u_xx + u^2``.  After
eliminating ``V^{n+1}`` each step is a single generalized Lyapunov
equation for ``U^{n+1}``

    W U^{n+1} + U^{n+1} A = Bt U^n + U^n B + b2 R V^n
                            - (W U^{n-1} + U^{n-1} A) - a2 R (F^{n-1} + F^n)

followed by the explicit update

    V^{n+1} = 2 c2 R U^{n+1} + 2 R (c1 U^n + c2 U^{n-1}) - V^{n-1} + 2 Fhat^n.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import BlowUpError, DimensionError, NumericalFailure
from .grid import GridSpec
from .operators import SchemeMatrices, generalized_apply, inf_norm
from .profiles import Profile
from .solver import SolverOptions, solve


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class State:
    """Two-level window ``(U^n, U^{n-1}, V^n, V^{n-1})`` at time ``t``."""

    n: int
    t: float
    U_curr: np.ndarray
    U_prev: np.ndarray
    V_curr: np.ndarray
    V_prev: np.ndarray

    def __post_init__(self):
        for name in ("U_curr", "U_prev", "V_curr", "V_prev"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        shapes = {self.U_curr.shape, self.U_prev.shape, self.V_curr.shape, self.V_prev.shape}
        if len(shapes) != 1:
            raise DimensionError(f"state fields differ in shape: {sorted(shapes)}")

    def pair_norm(self) -> float:
        """``max(||U^n||, ||V^n||)`` in the operator infinity norm."""
        return max(inf_norm(self.U_curr), inf_norm(self.V_curr))


def nonlinearity(U):
    U = np.asarray(U, dtype=float)
    return U * U


def fhat(F_prev, F_curr):
    F_prev = np.asarray(F_prev, dtype=float)
    F_curr = np.asarray(F_curr, dtype=float)
    if F_prev.shape != F_curr.shape:
        raise DimensionError(f"shape mismatch {F_prev.shape} vs {F_curr.shape}")
    return 0.5 * (F_prev + F_curr)


def discrete_v(U, grid: GridSpec, R):
    """``V = delta R U + U^2``; ``R`` differences along x only."""
    U = np.asarray(U, dtype=float)
    if R.shape[0] != U.shape[0] or U.shape[0] != U.shape[1]:
        raise DimensionError(f"R {R.shape} incompatible with field {U.shape}")
    return grid.delta * (R @ U) + U * U


def discrete_laplacian(U, grid: GridSpec, R):
    """Five-point Laplacian with ghost reflection on all four sides."""
    return grid.delta * (R @ U + U @ R.T)


def initialize(grid: GridSpec, profile: Profile, mats: SchemeMatrices,
               legacy_cid2: bool = False) -> State:
    """Starting window ``(U^1, U^0, V^1, V^0)``.

    ``U^0`` samples ``u0``.  ``U^1`` is the second-order Taylor start
    ``U^0 + l phi + l^2/2 (lap_h U^0 + delta R V^0)``.  With
    ``legacy_cid2`` the start formula is instead
    ``U^0 + l^2/2 lap_h U^0 + 1/2 delta R V^0 + l phi`` which omits the
    ``l^2`` on the ``v_xx`` term; it is kept for comparison runs only.
    """
    if profile.has_exact and profile.t0 != grid.t0:
        profile = replace(profile, t0=grid.t0)
    X, Y = grid.mesh()
    U0 = profile.u0(X, Y)
    Phi = profile.phi(X, Y)
    R = mats.R
    V0 = discrete_v(U0, grid, R)
    lap = discrete_laplacian(U0, grid, R)
    vxx = grid.delta * (R @ V0)
    l = grid.l
    if legacy_cid2:
        U1 = U0 + 0.5 * l * l * lap + 0.5 * vxx + l * Phi
    else:
        U1 = U0 + l * Phi + 0.5 * l * l * (lap + vxx)
    V1 = discrete_v(U1, grid, R)
    return State(n=1, t=grid.time(1), U_curr=U1, U_prev=U0, V_curr=V1, V_prev=V0)


def step_rhs(state: State, mats: SchemeMatrices):
    """Right-hand side of the per-step Lyapunov equation."""
    c = mats.coeffs
    R = mats.R
    F_prev = nonlinearity(state.U_prev)
    F_curr = nonlinearity(state.U_curr)
    return (mats.apply_BB(state.U_curr)
            + c.b2 * (R @ state.V_curr)
            - mats.apply_WA(state.U_prev)
            - c.a2 * (R @ (F_prev + F_curr)))


def v_update(U_next, state: State, mats: SchemeMatrices):
    c = mats.coeffs
    R = mats.R
    F_hat = fhat(nonlinearity(state.U_prev), nonlinearity(state.U_curr))
    return (2.0 * c.c2 * (R @ U_next)
            + 2.0 * (R @ (c.c1 * state.U_curr + c.c2 * state.U_prev))
            - state.V_prev + 2.0 * F_hat)


def step(state: State, mats: SchemeMatrices, grid: GridSpec,
         opts: SolverOptions = SolverOptions()) -> State:
    """Advance the window by one time level.

    The solver is told which right-factor convention to use by
    ``mats.right_transpose``; ``opts.right_transpose`` is overridden so
    the two can never disagree.
    """
    if opts.right_transpose != mats.right_transpose:
        opts = replace(opts, right_transpose=mats.right_transpose)
    C = step_rhs(state, mats)
    if not np.all(np.isfinite(C)):
        raise BlowUpError(state.n + 1)
    U_next, _ = solve(mats.W, mats.A, C, opts, apply=mats.apply_WA)
    V_next = v_update(U_next, state, mats)
    if not (np.all(np.isfinite(U_next)) and np.all(np.isfinite(V_next))):
        raise BlowUpError(state.n + 1)
    return State(n=state.n + 1, t=grid.time(state.n + 1),
                 U_curr=U_next, U_prev=state.U_curr,
                 V_curr=V_next, V_prev=state.V_curr)


Observer = Callable[[int, float, float, float, State], None]


def run(grid: GridSpec, profile: Profile, mats: SchemeMatrices,
        opts: SolverOptions = SolverOptions(), n_steps: int = 0,
        observer: Optional[Observer] = None, legacy_cid2: bool = False) -> State:
    """Initialize and take ``n_steps`` steps.

    ``observer(n, t, ||U^n||, ||V^n||, state)`` is called after every step.
    Numerical failures are re-raised with the failing step index in
    ``err.step``.
    """
    if n_steps < 0:
        raise ValueError(f"n_steps must be >= 0, got {n_steps}")
    state = initialize(grid, profile, mats, legacy_cid2)
    for _ in range(n_steps):
        try:
            state = step(state, mats, grid, opts)
        except NumericalFailure as err:
            if getattr(err, "step", None) is None:
                err.step = state.n + 1
                err.args = (f"step n = {state.n + 1}: {err}",)
            raise
        if observer is not None:
            observer(state.n, state.t, inf_norm(state.U_curr), inf_norm(state.V_curr), state)
    return state


def matrixform_residuals(prev: State, nxt: State, mats: SchemeMatrices):
    """Residuals of the original coupled pair evaluated on ``(prev -> nxt)``.

    First equation:  ``L_A(U^{n+1}) + a2 R V^{n+1}
    = L_B(U^n) - L_A(U^{n-1}) + R (b2 V^n - a2 V^{n-1})``.
    Second: ``V^{n+1}/2 - c2 R U^{n+1} = R (c1 U^n + c2 U^{n-1}) - V^{n-1}/2 + Fhat^n``.
    """
    c = mats.coeffs
    rt = mats.right_transpose
    R, A, B = mats.R, mats.A, mats.B
    Un1, Vn1 = nxt.U_curr, nxt.V_curr
    Un, Vn, Um1, Vm1 = prev.U_curr, prev.V_curr, prev.U_prev, prev.V_prev
    F_hat = fhat(nonlinearity(Um1), nonlinearity(Un))
    r1 = (generalized_apply(A, A, Un1, rt) + c.a2 * (R @ Vn1)
          - generalized_apply(B, B, Un, rt) + generalized_apply(A, A, Um1, rt)
          - R @ (c.b2 * Vn - c.a2 * Vm1))
    r2 = (0.5 * Vn1 - c.c2 * (R @ Un1)
          - R @ (c.c1 * Un + c.c2 * Um1) + 0.5 * Vm1 - F_hat)
    return r1, r2

