"""The limit equation on y = 0: ``tau'' - tau' = r`` with Dirichlet ends.

Two independent solvers are provided: a Green's-function representation
(:func:`green_solve`, used by the trace solver) and a central-difference
tridiagonal solve (:func:`fd_bvp_solve`, the cross-check).
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

from .problem import CornerValues, ValidatedProblem
from .quadrature import GridFunction, diff_matrix, trapz_weights

__all__ = [
    "greens_g",
    "greens_matrix",
    "green_apply",
    "green_solve",
    "fd_bvp_solve",
    "ode_rhs",
    "solve_tau1",
]

_E = np.e


def greens_g(x, t):
    """Green's function of ``tau'' - tau' = f``, ``tau(0) = tau(1) = 0``.

    ``tau(x) = ∫_0^1 G(x, t) f(t) dt``. Non-positive on the unit square.
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    lo = np.minimum(x, t)
    hi = np.maximum(x, t)
    return np.exp(-t) * np.expm1(lo) * (np.exp(hi) - _E) / (_E - 1.0)


def greens_matrix(n: int) -> np.ndarray:
    """Trapezoid discretisation of ``f -> ∫ G(x_i, t) f(t) dt`` on ``n+1`` nodes.

    Each ``x_i`` is a node, so the composite rule is automatically split at
    the kink ``t = x_i``.
    """
    nodes = np.linspace(0.0, 1.0, n + 1)
    return greens_g(nodes[:, None], nodes[None, :]) * trapz_weights(n, 1.0 / n)[None, :]


_GL_X, _GL_W = np.polynomial.legendre.leggauss(40)


def green_apply(x: float, f) -> float:
    """``∫_0^1 G(x, t) f(t) dt`` for a callable ``f``, Gauss-Legendre on each side of the kink."""
    total = 0.0
    for a, b in ((0.0, x), (x, 1.0)):
        if b > a:
            t = 0.5 * (b - a) * _GL_X + 0.5 * (a + b)
            total += 0.5 * (b - a) * float(np.dot(_GL_W, greens_g(x, t) * f(t)))
    return total


def _line(corners: CornerValues, nodes: np.ndarray) -> np.ndarray:
    c0, c1 = corners
    return c0 + (c1 - c0) * nodes


def green_solve(r, corners: CornerValues) -> np.ndarray:
    """Nodal ``tau`` on ``[0, 1]`` from nodal right-hand sides ``r``.

    ``r`` may be a vector or a stack of column vectors (first axis = nodes).
    The straight line through the corners has ``line'' - line' = -(c1 - c0)``,
    so the Green's integral acts on ``r + (c1 - c0)``, a constant load added
    to the right side.
    """
    r = np.asarray(r, dtype=float)
    n = r.shape[0] - 1
    c0, c1 = corners
    line = _line(corners, np.linspace(0.0, 1.0, n + 1))
    if r.ndim > 1:
        line = line.reshape((-1,) + (1,) * (r.ndim - 1))
    return line + greens_matrix(n) @ (r + (c1 - c0))


def fd_bvp_solve(r: GridFunction, corners: CornerValues) -> GridFunction:
    """Central differences for ``tau'' - tau' = r`` and a tridiagonal solve."""
    n, h = r.n, r.step
    c0, c1 = corners
    m = n - 1
    lower = 1.0 / h**2 + 1.0 / (2 * h)
    diag = -2.0 / h**2
    upper = 1.0 / h**2 - 1.0 / (2 * h)
    # diagonal dominance: |diag| = |lower| + |upper| with both positive for h < 2
    assert lower > 0 and upper > 0, "tridiagonal system not diagonally dominant"
    ab = np.zeros((3, m))
    ab[0, 1:] = upper
    ab[1, :] = diag
    ab[2, :-1] = lower
    rhs = np.array(r.values[1:-1], dtype=float)
    rhs[0] -= lower * c0
    rhs[-1] -= upper * c1
    inner = solve_banded((1, 1), ab, rhs)
    return GridFunction(0.0, 1.0, np.concatenate(([c0], inner, [c1])))


def ode_rhs(phi1, problem: ValidatedProblem) -> np.ndarray:
    """Nodal ``r(t) = -(2 [a3 - a1 phi1] / a2)'(t/2)`` on the master grid.

    ``phi1`` holds values on the half grid of ``[0, 1/2]``, node ``j`` at
    ``s_j = j h / 2``, which is where the coefficients are sampled.
    """
    phi1 = np.asarray(phi1, dtype=float)
    n = phi1.shape[0] - 1
    s = np.linspace(0.0, 0.5, n + 1)
    shape = (-1,) + (1,) * (phi1.ndim - 1)
    a1, a2, a3 = (np.reshape(f(s), shape) for f in (problem.a1, problem.a2, problem.a3))
    A = (a3 - a1 * phi1) / a2
    return -2.0 * (diff_matrix(n, 1.0 / n) @ A)


def solve_tau1(phi1: GridFunction, problem: ValidatedProblem) -> GridFunction:
    """Trace on y = 0 from the characteristic values ``phi1`` on ``[0, 1/2]``."""
    if phi1.n != problem.M or abs(phi1.lo) > 0 or abs(phi1.hi - 0.5) > 1e-15:
        raise ValueError("phi1 must live on the half grid of [0, 1/2] with M steps")
    r = ode_rhs(phi1.values, problem)
    if not np.all(np.isfinite(r)):
        raise FloatingPointError("non-finite right-hand side in the limit equation")
    return GridFunction(0.0, 1.0, green_solve(r, problem.corners))
