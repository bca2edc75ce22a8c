"""Initial data and exact solutions, described symbolically.

A profile is a sympy expression in ``x, y`` (and optionally ``t``); every
derivative the stepper or the analysis needs is derived from it and
compiled with ``lambdify``, so hand-coded derivatives never drift from
the function they belong to.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
import sympy as sp

from .errors import ProfileError

x, y, t = sp.symbols("x y t", real=True)


def _compile(expr, args):
    f = sp.lambdify(args, expr, modules="numpy")

    def evaluate(*vals):
        out = f(*vals)
        shape = np.broadcast(*vals).shape
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()

    return evaluate


@dataclass(frozen=True)
class Profile:
    """Initial position ``u0``, initial velocity ``phi`` and, optionally,
    an exact space-time function ``u(x, y, t)`` used for truncation studies.

    When ``exact`` is given, ``u0`` and ``phi`` default to ``u(., ., t0)``
    and ``u_t(., ., t0)``.  ``amplitude`` multiplies all three.
    """

    name: str
    u0_expr: sp.Expr = sp.Integer(0)
    phi_expr: sp.Expr = sp.Integer(0)
    exact: sp.Expr | None = None
    amplitude: float = 1.0
    neumann: bool = True
    t0: float = 0.0

    def scaled(self, amplitude: float) -> "Profile":
        return replace(self, amplitude=float(amplitude))

    # symbolic pieces -------------------------------------------------
    @cached_property
    def _u0(self):
        if self.exact is not None:
            return self.amplitude * self.exact.subs(t, self.t0)
        return self.amplitude * sp.sympify(self.u0_expr)

    @cached_property
    def _phi(self):
        if self.exact is not None:
            return self.amplitude * sp.diff(self.exact, t).subs(t, self.t0)
        return self.amplitude * sp.sympify(self.phi_expr)

    @cached_property
    def _u(self):
        if self.exact is None:
            raise ProfileError(f"profile {self.name!r} has no exact space-time solution")
        return self.amplitude * self.exact

    # compiled functions of (x, y) ------------------------------------
    @cached_property
    def u0(self):
        return _compile(self._u0, (x, y))

    @cached_property
    def phi(self):
        return _compile(self._phi, (x, y))

    @cached_property
    def laplacian_u0(self):
        return _compile(sp.diff(self._u0, x, 2) + sp.diff(self._u0, y, 2), (x, y))

    @cached_property
    def v0(self):
        """``u0_xx + u0^2``."""
        return _compile(sp.diff(self._u0, x, 2) + self._u0 ** 2, (x, y))

    @cached_property
    def v0_xx(self):
        v = sp.diff(self._u0, x, 2) + self._u0 ** 2
        return _compile(sp.diff(v, x, 2), (x, y))

    # compiled functions of (x, y, t) ---------------------------------
    @cached_property
    def u(self):
        return _compile(self._u, (x, y, t))

    @cached_property
    def v(self):
        return _compile(sp.diff(self._u, x, 2) + self._u ** 2, (x, y, t))

    @cached_property
    def residual1(self):
        """Continuous residual ``u_tt - lap(u) - v_xx`` of the exact function."""
        u = self._u
        v = sp.diff(u, x, 2) + u ** 2
        r = sp.diff(u, t, 2) - sp.diff(u, x, 2) - sp.diff(u, y, 2) - sp.diff(v, x, 2)
        return _compile(sp.simplify(r), (x, y, t))

    @cached_property
    def residual2(self):
        """Continuous residual of ``v = u_xx + u^2``; zero by construction of ``v``."""
        return _compile(sp.Integer(0), (x, y, t))

    def sample(self, fn, grid, *extra):
        X, Y = grid.mesh()
        return fn(X, Y, *extra)

    @property
    def has_exact(self) -> bool:
        return self.exact is not None


def _cos_mode(k, L0, L1, var):
    return sp.cos(k * sp.pi * (var - L0) / (L1 - L0))


def zero() -> Profile:
    return Profile("zero")


def constant(value=1.0) -> Profile:
    return Profile("constant", exact=sp.Float(value) + 0 * t)


def cosine(L0=0.0, L1=1.0, kx=1, ky=1, phi_scale=0.0) -> Profile:
    """``cos(kx pi X) cos(ky pi Y)`` in the normalized coordinates, at rest
    unless ``phi_scale`` is nonzero."""
    L0, L1 = sp.nsimplify(L0), sp.nsimplify(L1)
    shape = _cos_mode(kx, L0, L1, x) * _cos_mode(ky, L0, L1, y)
    return Profile("cosine", u0_expr=shape, phi_expr=sp.nsimplify(phi_scale) * shape)


def cosine_decay(L0=0.0, L1=1.0, kx=1, ky=1, rate=1.0) -> Profile:
    """Space-time function ``cos(kx pi X) cos(ky pi Y) exp(-rate t)``."""
    L0, L1 = sp.nsimplify(L0), sp.nsimplify(L1)
    shape = _cos_mode(kx, L0, L1, x) * _cos_mode(ky, L0, L1, y)
    return Profile("cosine_decay", exact=shape * sp.exp(-sp.nsimplify(rate) * t))


def affine(a=1.0, b=1.0, c=0.0) -> Profile:
    """``a x + b y + c``; not Neumann compatible, interior studies only."""
    return Profile("affine", exact=sp.Float(a) * x + sp.Float(b) * y + sp.Float(c) + 0 * t,
                   neumann=False)


BUILTIN = {
    "zero": zero,
    "constant": constant,
    "cosine": cosine,
    "cosine_decay": cosine_decay,
    "affine": affine,
}


def make_profile(name: str, amplitude: float = 1.0, **params) -> Profile:
    try:
        factory = BUILTIN[name]
    except KeyError:
        raise ProfileError(
            f"unknown profile {name!r}; choose from {sorted(BUILTIN)}"
        ) from None
    return factory(**params).scaled(amplitude)
