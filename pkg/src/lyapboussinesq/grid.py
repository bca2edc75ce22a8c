"""Space-time discretization of the square domain ]L0, L1[^2."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridError


@dataclass(frozen=True)
class GridSpec:
    """Uniform mesh on a square domain plus the time step.

    Fields are indexed ``U[j, m]`` with ``j`` along x and ``m`` along y,
    node ``(j, m)`` sitting at ``(L0 + j*h, L0 + m*h)``.

    ``coupled`` records whether the time step obeys ``l = eps * h**(2+s)``
    with ``s > 0``.  Grids built from an explicit ``l`` carry the solved
    exponent (with ``eps = 1``) so they can be compared with coupled ones.
    """

    L0: float
    L1: float
    J: int
    h: float
    t0: float
    l: float
    alpha: float
    s: float
    eps: float
    sigma: float
    delta: float
    coupled: bool = True

    @property
    def size(self) -> int:
        """Number of nodes per side, ``J + 1``."""
        return self.J + 1

    @property
    def nodes(self) -> np.ndarray:
        return self.L0 + self.h * np.arange(self.J + 1)

    def mesh(self):
        """Return ``(X, Y)`` node coordinate arrays with ``ij`` indexing."""
        x = self.nodes
        return np.meshgrid(x, x, indexing="ij")

    def time(self, n: int) -> float:
        return self.t0 + n * self.l

    def refined(self) -> "GridSpec":
        """Same domain with ``J`` doubled; ``l`` follows the coupling."""
        if not self.coupled:
            raise GridError("cannot refine an uncoupled grid: no coupling law for l")
        return build_grid(self.L0, self.L1, 2 * self.J, self.alpha, self.s, self.eps, self.t0)


def _check_common(L0, L1, J, alpha):
    if not L1 > L0:
        raise GridError(f"domain order: need L1 > L0, got L0={L0}, L1={L1}")
    if int(J) != J or J < 2:
        raise GridError(f"grid size: need integer J >= 2, got J={J}")
    if not 0.0 <= alpha <= 0.5:
        raise GridError(f"scheme weight: need 0 <= alpha <= 0.5, got alpha={alpha}")


def build_grid(L0, L1, J, alpha=0.25, s=1.0, eps=1.0, t0=0.0) -> GridSpec:
    """Grid whose time step is tied to the space step by ``l = eps*h**(2+s)``.

    Examples
    --------
    >>> g = build_grid(0.0, 1.0, 10, 0.25, 1.0, 1.0, 0.0)
    >>> round(g.l, 12), round(g.sigma, 12), round(g.delta, 9)
    (0.001, 0.0001, 100.0)
    """
    _check_common(L0, L1, J, alpha)
    if not eps > 0:
        raise GridError(f"coupling prefactor: need eps > 0, got eps={eps}")
    if not s > 0:
        raise GridError(f"coupling exponent: need s > 0, got s={s}")
    J = int(J)
    h = (L1 - L0) / J
    l = eps * h ** (2.0 + s)
    return GridSpec(
        L0=float(L0), L1=float(L1), J=J, h=h, t0=float(t0), l=l,
        alpha=float(alpha), s=float(s), eps=float(eps),
        sigma=l * l / (h * h), delta=1.0 / (h * h), coupled=True,
    )


def build_grid_explicit(L0, L1, J, alpha, l, t0=0.0) -> GridSpec:
    """Grid with a caller-chosen time step, for deliberate coupling violations.

    The exponent is solved from ``l = h**(2+s)``; the grid is flagged
    uncoupled when ``h >= 1`` or the solved ``s`` is not positive.
    """
    _check_common(L0, L1, J, alpha)
    if not l > 0:
        raise GridError(f"time step: need l > 0, got l={l}")
    J = int(J)
    h = (L1 - L0) / J
    if h < 1.0:
        s = math.log(l) / math.log(h) - 2.0
        eps = 1.0
        coupled = s > 0
    else:
        s = math.nan
        eps = math.nan
        coupled = False
    return GridSpec(
        L0=float(L0), L1=float(L1), J=J, h=h, t0=float(t0), l=float(l),
        alpha=float(alpha), s=s, eps=eps,
        sigma=l * l / (h * h), delta=1.0 / (h * h), coupled=coupled,
    )


def node_coordinates(grid: GridSpec, j: int, m: int) -> tuple[float, float]:
    if not (0 <= j <= grid.J and 0 <= m <= grid.J):
        raise IndexError(f"node ({j}, {m}) outside 0..{grid.J}")
    return grid.L0 + j * grid.h, grid.L0 + m * grid.h
