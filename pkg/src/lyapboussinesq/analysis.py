"""Verification harness: truncation order, operator bounds, stability.

Norm conventions: operator bounds and the stability pair norm use the
operator infinity norm (max row sum).  Truncation defects and solution
differences are grid functions and are measured with the nodal sup norm,
which is the norm in which an ``O(h^2)`` defect shrinks by 4 per halving.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy.optimize import brentq

from .errors import NumericalFailure, ProfileError
from .grid import GridSpec, build_grid
from .operators import (CoefficientSet, SchemeMatrices, build_matrices,
                        deviation_from_half_identity, generalized_apply,
                        inf_norm, lyapunov_deviation, max_norm)
from .profiles import Profile, constant, cosine, zero
from .report import Report
from .solver import SolverOptions, solve_fixed_point, solve_kronecker
from .stepper import discrete_v, run

ZERO_TOL = 1e-9


# ---------------------------------------------------------------------------
# consistency

def truncation_residual(profile: Profile, grid: GridSpec, mats: SchemeMatrices, t: float,
                        stride: int = 1):
    """Sup-norm defects of both discrete equations for an exact function.

    The exact ``u`` and ``v = u_xx + u^2`` are sampled at ``t - l, t, t + l``
    and inserted into

        (U+ - 2U + U-)/l^2 - lap_h(U^a) - delta R V^a      (first equation)
        (V+ + V-)/2 - delta R U^a - (F(U-) + F(U))/2       (second equation)

    with ``X^a = alpha X+ + (1 - 2 alpha) X + alpha X-``.  The continuous
    residuals are subtracted and the sup norm is taken over interior nodes.
    With ``stride > 1`` only every ``stride``-th node enters the norm, which
    lets a refinement study compare defects at the same physical points.
    """
    if not profile.has_exact:
        raise ProfileError(f"profile {profile.name!r} has no exact space-time solution")
    l, a, d = grid.l, grid.alpha, grid.delta
    R = mats.R
    X, Y = grid.mesh()
    Um, U0, Up = (profile.u(X, Y, np.full_like(X, s)) for s in (t - l, t, t + l))
    Vm, V0, Vp = (profile.v(X, Y, np.full_like(X, s)) for s in (t - l, t, t + l))
    Ua = a * Up + (1.0 - 2.0 * a) * U0 + a * Um
    Va = a * Vp + (1.0 - 2.0 * a) * V0 + a * Vm
    T = np.full_like(X, t)
    d1 = ((Up - 2.0 * U0 + Um) / (l * l)
          - d * (R @ Ua + Ua @ R.T) - d * (R @ Va)
          - profile.residual1(X, Y, T))
    d2 = (0.5 * (Vp + Vm) - d * (R @ Ua) - 0.5 * (Um * Um + U0 * U0)
          - profile.residual2(X, Y, T))
    if grid.J % stride:
        raise ValueError(f"stride {stride} does not divide J = {grid.J}")
    pts = (slice(stride, grid.J - stride + 1, stride),) * 2
    return max_norm(d1[pts]), max_norm(d2[pts])


@dataclass
class RefinementLevel:
    J: int
    h: float
    l: float
    residual_eq1: float = math.nan
    residual_eq2: float = math.nan
    solution_error: float = math.nan
    steps: int = 0
    t_final: float = math.nan


@dataclass
class RefinementStudy:
    """Per-level measurements, coarse to fine, and log2 ratios between them.

    ``orders`` maps a quantity name to its observed orders; ``exact_zero``
    is the sentinel for studies whose measurements all vanish, in which
    case no order is defined and ``orders`` holds empty lists.
    """

    levels: list
    orders: dict
    ratios: dict
    exact_zero: bool = False


def _orders(values, zero_tol):
    ratios, orders = [], []
    for a, b in zip(values[:-1], values[1:]):
        if a <= zero_tol or b <= zero_tol:
            ratios.append(math.nan)
            orders.append(math.nan)
        else:
            ratios.append(a / b)
            orders.append(math.log2(a / b))
    return ratios, orders


def _level_grids(grid_base: GridSpec, levels: int):
    grids = [grid_base]
    for _ in range(levels - 1):
        grids.append(grids[-1].refined())
    return grids


def consistency_study(profile: Profile, grid_base: GridSpec, levels: int = 3,
                      t: float | None = None, zero_tol: float = ZERO_TOL) -> RefinementStudy:
    """Truncation defects on successively halved meshes with coupled ``l``.

    Defects are compared on the interior nodes of ``grid_base``; a finer
    level's own interior reaches closer to the walls, and mixing the two
    sample sets biases the ratios low on coarse grids.
    """
    if levels < 2:
        raise ValueError(f"need at least 2 levels, got {levels}")
    t = grid_base.t0 if t is None else t
    out = []
    for k, g in enumerate(_level_grids(grid_base, levels)):
        r1, r2 = truncation_residual(profile, g, build_matrices(g), t, stride=2 ** k)
        out.append(RefinementLevel(J=g.J, h=g.h, l=g.l, residual_eq1=r1, residual_eq2=r2))
    res1 = [lv.residual_eq1 for lv in out]
    res2 = [lv.residual_eq2 for lv in out]
    if max(res1 + res2) <= zero_tol:
        return RefinementStudy(out, {"eq1": [], "eq2": []}, {"eq1": [], "eq2": []}, True)
    rat1, ord1 = _orders(res1, zero_tol)
    rat2, ord2 = _orders(res2, zero_tol)
    return RefinementStudy(out, {"eq1": ord1, "eq2": ord2}, {"eq1": rat1, "eq2": rat2})


def convergence_study(profile: Profile, grid_base: GridSpec, levels: int = 3,
                      n_steps_base: int = 0, opts: SolverOptions = SolverOptions(),
                      right_transpose: bool = True,
                      zero_tol: float = ZERO_TOL) -> RefinementStudy:
    """Self-convergence at a fixed final time, compared on the coarse nodes.

    Level ``k`` has ``J * 2**k`` cells and ``l`` from the coupling, so the
    number of time levels grows by ``2**(2+s)`` per refinement; that factor
    must be an integer for the final times to coincide.

    The continuous problem amplifies a mode of wavenumber ``k`` roughly like
    ``exp(k^2 t)``, and on a mesh of width ``h`` the fastest discrete mode
    grows like ``exp(4 t / h^2)``.  Differences are only meaningful while
    ``4 (T - t0) / h_finest^2`` stays moderate, hence the short default
    horizon (the first time level of the base grid).
    """
    if levels < 3:
        raise ValueError(f"need at least 3 levels for an observed order, got {levels}")
    grids = _level_grids(grid_base, levels)
    factor = grid_base.l / grids[1].l
    if abs(factor - round(factor)) > 1e-9 * factor:
        raise ValueError(
            f"time-step ratio {factor:.6g} between levels is not an integer; "
            "choose s so that 2**(2+s) is integral"
        )
    factor = int(round(factor))
    time_levels = 1 + n_steps_base
    out, finals = [], []
    for k, g in enumerate(grids):
        n_steps = time_levels * factor ** k - 1
        mats = build_matrices(g, right_transpose)
        state = run(g, profile, mats, opts, n_steps)
        stride = 2 ** k
        finals.append(np.array(state.U_curr[::stride, ::stride]))
        out.append(RefinementLevel(J=g.J, h=g.h, l=g.l, steps=n_steps, t_final=state.t))
    diffs = [max_norm(a - b) for a, b in zip(finals[:-1], finals[1:])]
    for lv, dv in zip(out, diffs):
        lv.solution_error = dv
    if max(diffs) <= zero_tol:
        return RefinementStudy(out, {"solution": []}, {"solution": []}, True)
    rat, order = _orders(diffs, zero_tol)
    return RefinementStudy(out, {"solution": order}, {"solution": rat})


# ---------------------------------------------------------------------------
# operator bounds

def random_unit_matrices(n: int, samples: int, seed: int):
    """Entries uniform on [-1, 1], each matrix scaled to unit inf-norm."""
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        X = rng.uniform(-1.0, 1.0, size=(n, n))
        yield X / inf_norm(X)


def lbb_printed_bound(c: CoefficientSet) -> float:
    """``2 max(|b1|, 2|b2|) + 4 |a2 c1|``."""
    return 2.0 * max(abs(c.b1), 2.0 * abs(c.b2)) + 4.0 * abs(c.a2 * c.c1)


def operator_report(grid: GridSpec, mats: SchemeMatrices, samples: int = 100,
                    seed: int = 0, timestamp: str | None = None) -> Report:
    """Sampled norms of ``X -> W X + X A`` and ``X -> Bt X + X B``."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rt = mats.right_transpose
    q = deviation_from_half_identity(mats.W, mats.A)
    lwa, lbb = [], []
    for X in random_unit_matrices(mats.size, samples, seed):
        lwa.append(inf_norm(generalized_apply(mats.W, mats.A, X, rt)))
        lbb.append(inf_norm(generalized_apply(mats.Btilde, mats.B, X, rt)))
    eye = np.eye(mats.size)
    at_identity = inf_norm(generalized_apply(mats.W, mats.A, eye, rt))
    direct = inf_norm(mats.W + (mats.A.T if rt else mats.A))
    payload = {
        "J": grid.J, "alpha": grid.alpha, "s": grid.s, "eps": grid.eps,
        "h": grid.h, "l": grid.l, "right_transpose": rt, "samples": samples,
        "lyapunov_deviation": q,
        "lwa_min": min(lwa), "lwa_max": max(lwa),
        "lbb_max": max(lbb), "lbb_printed_bound": lbb_printed_bound(mats.coeffs),
        "lwa_at_identity": at_identity, "norm_W_plus_A": direct,
        "checks": {
            "lwa_within_1_pm_q": (min(lwa) >= 1.0 - q - 1e-12) and (max(lwa) <= 1.0 + q + 1e-12),
            "lwa_within_half_three_halves": q <= 0.5 and min(lwa) >= 0.5 and max(lwa) <= 1.5,
            "lbb_le_6": max(lbb) <= 6.0,
            "identity_closed_form": abs(at_identity - direct) <= 1e-14 * max(1.0, direct),
        },
    }
    return Report("operators", payload, {"seed": seed, "timestamp": timestamp})


# ---------------------------------------------------------------------------
# stability

def positive_root(a: float, b: float, c: float):
    """Positive root of ``a z^2 + b z + c`` with ``a > 0``, or ``None`` when
    ``c >= 0`` (then ``z = 0`` is not strictly inside the admissible set).

    Written as ``-2c / (b + sqrt(b^2 - 4ac))`` to avoid cancellation.
    """
    if c >= 0:
        return None
    return (-2.0 * c) / (b + math.sqrt(b * b - 4.0 * a * c))


@dataclass
class EtaBounds:
    """Admissible radii from the first-step and induction quadratics.

    ``eta1``: ``8 z^2 + (19 + 8 l P) z + 3 l P + 4 l^2 P^2 - eps``
    ``eta1_prime``: ``A z^2 + (B + 16|c2|) z + C - eps`` with
    ``A = 3 + 32|c2|``, ``B = 4(|c1| + 8|c2|(2 + l P) + l P + 1/h^2)``,
    ``C = 2(1 + 8|c2|) l^2 P^2 + 4 l (4|c2| + 1/h^2) P``
    ``eps1``: ``8 z^2 + 19 z - eps``
    ``eps1_prime``: ``(32|c2| + 2) z^2 + (4|c1| + 80|c2| + 1) z - eps``
    where ``P = ||phi||``.  A root that does not exist is reported as 0 and
    named in ``degenerate``.
    """

    eta1: float
    eta1_prime: float
    eps1: float
    eps1_prime: float
    quadratics: dict
    back_substitution: dict
    degenerate: list = field(default_factory=list)

    @property
    def eta0(self) -> float:
        return min(self.eta1, self.eta1_prime)

    @property
    def eps0(self) -> float:
        return min(self.eps1, self.eps1_prime)


def theoretical_eta(epsilon: float, l: float, phi_norm: float, coeffs: CoefficientSet,
                    h: float) -> EtaBounds:
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    P = phi_norm
    c1, c2 = abs(coeffs.c1), abs(coeffs.c2)
    inv_h2 = 1.0 / (h * h)
    quads = {
        "eta1": (8.0, 19.0 + 8.0 * l * P, 3.0 * l * P + 4.0 * l * l * P * P - epsilon),
        "eta1_prime": (
            3.0 + 32.0 * c2,
            4.0 * (c1 + 8.0 * c2 * (2.0 + l * P) + l * P + inv_h2) + 16.0 * c2,
            2.0 * (1.0 + 8.0 * c2) * l * l * P * P + 4.0 * l * (4.0 * c2 + inv_h2) * P - epsilon,
        ),
        "eps1": (8.0, 19.0, -epsilon),
        "eps1_prime": (32.0 * c2 + 2.0, 4.0 * c1 + 80.0 * c2 + 1.0, -epsilon),
    }
    roots, back, degenerate = {}, {}, []
    for name, (a, b, c) in quads.items():
        z = positive_root(a, b, c)
        if z is None:
            degenerate.append(name)
            z = 0.0
            back[name] = math.nan
        else:
            back[name] = a * z * z + b * z + c
        roots[name] = z
    return EtaBounds(roots["eta1"], roots["eta1_prime"], roots["eps1"], roots["eps1_prime"],
                     {k: list(v) for k, v in quads.items()}, back, degenerate)


ProfileFamily = Callable[[np.random.Generator], Profile]


def cosine_family(L0=0.0, L1=1.0, kmax=2) -> ProfileFamily:
    """Random Neumann cosine modes with random sign, at rest."""
    def draw(rng):
        while True:
            kx, ky = (int(k) for k in rng.integers(0, kmax + 1, size=2))
            if kx or ky:
                break
        return cosine(L0, L1, kx, ky).scaled(float(rng.choice([-1.0, 1.0])))
    return draw


def constant_family(value=1.0) -> ProfileFamily:
    return lambda rng: constant(value)


def zero_family() -> ProfileFamily:
    return lambda rng: zero()


def _pair_norm_at(U0, grid, R, a):
    V0 = discrete_v(a * U0, grid, R)
    return max(inf_norm(a * U0), inf_norm(V0))


def _scale_to(profile: Profile, grid, R, target):
    """Rescale so that ``max(||U^0||, ||V^0||) == target``; ``None`` if the
    profile vanishes on the grid."""
    X, Y = grid.mesh()
    U0 = profile.u0(X, Y)
    if not np.any(U0):
        return None
    hi = 1.0
    while _pair_norm_at(U0, grid, R, hi) < target:
        hi *= 2.0
    a = brentq(lambda s: _pair_norm_at(U0, grid, R, s) - target, 0.0, hi, xtol=1e-15, rtol=1e-13)
    return profile.scaled(profile.amplitude * a)


@dataclass
class StabilityProbeResult:
    epsilon: float
    eta_found: float
    steps: int
    trials: int
    eta_theoretical: EtaBounds
    phi_norm: float
    log: list = field(default_factory=list)


def _trajectory_max(grid, profile, mats, opts, n_steps):
    """Largest pair norm over levels 0..n_steps+1, or ``inf`` on failure."""
    peak = [0.0]

    def watch(n, t, nu, nv, state):
        peak[0] = max(peak[0], nu, nv)

    try:
        state = run(grid, profile, mats, opts, 0)
        peak[0] = max(inf_norm(state.U_prev), inf_norm(state.V_prev), state.pair_norm())
        run(grid, profile, mats, opts, n_steps, observer=watch)
    except NumericalFailure:
        return math.inf
    return peak[0]


def stability_probe(grid: GridSpec, mats: SchemeMatrices, opts: SolverOptions,
                    epsilon: float, n_steps: int = 100, trials: int = 4,
                    family: Union[ProfileFamily, Profile, None] = None,
                    seed: int = 0, bisect_iter: int = 12) -> StabilityProbeResult:
    """Largest tested initial size keeping every trial within ``epsilon``.

    Each trial draws one profile variant from ``family``; for a candidate
    size ``a`` every variant is rescaled so that ``||(U^0, V^0)|| = a`` and
    run for ``n_steps`` steps.  ``a`` is accepted when no trial's pair norm
    ever exceeds ``epsilon``.  Since the initial pair itself must be
    within ``epsilon``, the search interval is ``[0, epsilon]``.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if family is None:
        family = cosine_family(grid.L0, grid.L1)
    elif isinstance(family, Profile):
        base = family
        family = lambda rng: base.scaled(base.amplitude * float(rng.choice([-1.0, 1.0])))
    rng = np.random.default_rng(seed)
    variants = [family(rng) for _ in range(trials)]
    log = []

    def admissible(a):
        ok = True
        for k, prof in enumerate(variants):
            scaled = _scale_to(prof, grid, mats.R, a)
            if scaled is None:
                scaled = prof
            peak = _trajectory_max(grid, scaled, mats, opts, n_steps)
            passed = peak <= epsilon
            log.append({"amplitude": a, "trial": k, "profile": prof.name,
                        "peak": peak, "accepted": passed})
            ok = ok and passed
            if not ok:
                break
        return ok

    if admissible(epsilon):
        lo = epsilon
    else:
        lo, hi = 0.0, epsilon
        for _ in range(bisect_iter):
            mid = 0.5 * (lo + hi)
            if admissible(mid):
                lo = mid
            else:
                hi = mid
    X, Y = grid.mesh()
    phi_norm = 0.0
    for prof in variants:
        scaled = _scale_to(prof, grid, mats.R, lo) if lo > 0 else None
        if scaled is not None:
            phi_norm = max(phi_norm, inf_norm(scaled.phi(X, Y)))
    eta = theoretical_eta(epsilon, grid.l, phi_norm, mats.coeffs, grid.h)
    return StabilityProbeResult(epsilon, lo, n_steps, trials, eta, phi_norm, log)


def stability_report(result: StabilityProbeResult, grid: GridSpec, seed: int,
                     timestamp: str | None = None) -> Report:
    eta = result.eta_theoretical
    payload = {
        "J": grid.J, "alpha": grid.alpha, "h": grid.h, "l": grid.l,
        "epsilon": result.epsilon, "eta_found": result.eta_found,
        "steps": result.steps, "trials": result.trials, "phi_norm": result.phi_norm,
        "eta_theoretical": {
            "eta1": eta.eta1, "eta1_prime": eta.eta1_prime, "eta0": eta.eta0,
            "eps1": eta.eps1, "eps1_prime": eta.eps1_prime, "eps0": eta.eps0,
            "back_substitution": eta.back_substitution, "degenerate": eta.degenerate,
        },
        "finite_horizon_only": True,
        "trial_log": result.log,
    }
    return Report("stability", payload, {"seed": seed, "timestamp": timestamp})


def study_report(kind: str, study: RefinementStudy, extra: dict | None = None,
                 timestamp: str | None = None) -> Report:
    payload = {"levels": study.levels, "orders": study.orders, "ratios": study.ratios,
               "exact_zero": study.exact_zero, **(extra or {})}
    return Report(kind, payload, {"timestamp": timestamp})


def deviation_rates(s: float, alpha: float = 0.25, J0: int = 10, levels: int = 4,
                    eps: float = 1.0, L0: float = 0.0, L1: float = 1.0):
    """Contraction factors on ``levels`` halvings and their successive ratios."""
    qs = [lyapunov_deviation(build_grid(L0, L1, J0 * 2 ** k, alpha, s, eps))
          for k in range(levels)]
    return qs, [a / b for a, b in zip(qs[:-1], qs[1:])]


# ---------------------------------------------------------------------------
# solver oracle

def oracle_crosscheck(Js=range(2, 9), alphas=(0.1, 0.25, 0.4), variants=(False, True),
                      samples=20, seed=0, s=1.0, eps=1.0, L0=0.0, L1=1.0,
                      tol=1e-12):
    """Fixed-point versus Kronecker solutions on random right-hand sides.

    Combinations whose contraction factor is not below 1 cannot be solved by
    the fixed-point route and are recorded with ``skipped = True``.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for J in Js:
        for alpha in alphas:
            g = build_grid(L0, L1, J, alpha, s, eps)
            for rt in variants:
                mats = build_matrices(g, rt)
                q = deviation_from_half_identity(mats.W, mats.A)
                row = {"J": J, "alpha": alpha, "right_transpose": rt, "q": q,
                       "skipped": not q < 1.0, "max_difference": math.nan,
                       "max_residual": math.nan, "max_iterations": 0}
                if q < 1.0:
                    opts = SolverOptions(tol=tol, right_transpose=rt)
                    diffs, resids, iters = [], [], []
                    for _ in range(samples):
                        C = rng.uniform(-1.0, 1.0, size=(J + 1, J + 1))
                        Xf, cert = solve_fixed_point(mats.W, mats.A, C, opts)
                        Xk = solve_kronecker(mats.W, mats.A, C, rt)
                        diffs.append(inf_norm(Xf - Xk))
                        resids.append(cert.residual_norm)
                        iters.append(cert.iterations)
                    row.update(max_difference=max(diffs), max_residual=max(resids),
                               max_iterations=max(iters))
                rows.append(row)
    return rows
