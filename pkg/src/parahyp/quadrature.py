"""Grid functions and the quadrature/differentiation rules used on them.

Everything lives on uniform grids. Operators that the trace solver needs in
matrix form (:func:`diff_matrix`, :func:`cumtrapz_matrix`) act along the
first axis, so they apply equally to a single vector or to a stack of
column vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridFunction",
    "trapz",
    "cumtrapz",
    "diff_nodal",
    "diff_matrix",
    "cumtrapz_matrix",
    "trapz_weights",
    "product_weights_sqrt",
    "product_weights_sqrt_matrix",
]


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nodal values on the uniform grid ``lo + j*h``, ``j = 0..n``."""

    lo: float
    hi: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 3:
            raise ValueError("a grid function needs at least 3 nodal values (n >= 2)")
        if not self.hi > self.lo:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))

    @classmethod
    def sample(cls, f, lo: float, hi: float, n: int) -> "GridFunction":
        nodes = np.linspace(lo, hi, n + 1)
        return cls(lo, hi, np.asarray(f(nodes), dtype=float) * np.ones_like(nodes))

    @property
    def n(self) -> int:
        return self.values.size - 1

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / self.n

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n + 1)

    def __call__(self, x):
        """Piecewise-linear interpolant; arguments outside the interval are clamped."""
        return np.interp(x, self.nodes, self.values)

    def antiderivative(self, x):
        """Exact integral of the piecewise-linear interpolant from ``lo`` to ``x``."""
        x = np.clip(np.asarray(x, dtype=float), self.lo, self.hi)
        h = self.step
        cum = np.concatenate(([0.0], np.cumsum(0.5 * h * (self.values[1:] + self.values[:-1]))))
        j = np.clip(np.floor((x - self.lo) / h).astype(int), 0, self.n - 1)
        dx = x - (self.lo + j * h)
        v0 = self.values[j]
        slope = (self.values[j + 1] - v0) / h
        return cum[j] + v0 * dx + 0.5 * slope * dx**2

    def integral(self, a, b):
        return self.antiderivative(b) - self.antiderivative(a)

    def derivative(self) -> "GridFunction":
        return diff_nodal(self)

    def max_abs_error(self, exact) -> float:
        return float(np.max(np.abs(self.values - exact(self.nodes))))

    def __repr__(self) -> str:
        return f"GridFunction([{self.lo:g}, {self.hi:g}], n={self.n})"


def trapz(f: GridFunction) -> float:
    v = f.values
    return float(f.step * (v.sum() - 0.5 * (v[0] + v[-1])))


def cumtrapz(f: GridFunction) -> GridFunction:
    v = f.values
    out = np.concatenate(([0.0], np.cumsum(0.5 * f.step * (v[1:] + v[:-1]))))
    return GridFunction(f.lo, f.hi, out)


def diff_matrix(n: int, h: float) -> np.ndarray:
    """Second-order first-derivative matrix on ``n+1`` nodes.

    Central differences inside, three-point one-sided formulas at both ends;
    exact for quadratics.
    """
    if n < 2:
        raise ValueError("need at least 3 nodes")
    D = np.zeros((n + 1, n + 1))
    i = np.arange(1, n)
    D[i, i - 1] = -0.5
    D[i, i + 1] = 0.5
    D[0, :3] = (-1.5, 2.0, -0.5)
    D[n, n - 2 :] = (0.5, -2.0, 1.5)
    return D / h


def diff_nodal(f: GridFunction) -> GridFunction:
    if f.n < 4:
        raise ValueError("diff_nodal needs n >= 4")
    return GridFunction(f.lo, f.hi, diff_matrix(f.n, f.step) @ f.values)


def cumtrapz_matrix(n: int, h: float) -> np.ndarray:
    """Lower-triangular matrix of the cumulative trapezoid rule (first row zero)."""
    C = 2.0 * np.tril(np.ones((n + 1, n + 1)), -1)
    C[:, 0] = 1.0
    C[np.arange(n + 1), np.arange(n + 1)] = 1.0
    C[0, 0] = 0.0
    return 0.5 * h * C


def trapz_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n + 1, h)
    w[0] = w[-1] = 0.5 * h
    return w


def _sqrt_cell_weights(m: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Weights of one cell ``[y-m*h, y-(m-1)*h]`` of the product trapezoid rule.

    Returns the weight on the far node (distance ``m*h`` from ``y``) and the
    near node (distance ``(m-1)*h``), written in cancellation-free form.
    """
    a = np.sqrt(m)
    b = np.sqrt(m - 1.0)
    diff = 1.0 / (a + b)  # a - b
    total = 2.0 * np.sqrt(h) * diff
    near = (2.0 / 3.0) * np.sqrt(h) * diff**2 * (2.0 * a + b)
    return total - near, near


def product_weights_sqrt(j: int, n: int, h: float) -> np.ndarray:
    """Product-trapezoid weights for ``∫_0^y f(η) (y-η)^(-1/2) dη`` at ``y = j*h``.

    The returned vector ``w`` (length ``n+1``, zero beyond index ``j``) makes
    ``w @ f`` the exact integral of the piecewise-linear interpolant of ``f``
    against the singular weight.
    """
    w = np.zeros(n + 1)
    if j <= 0:
        return w
    m = np.arange(j, 0, -1, dtype=float)  # cell [i, i+1] lies at distance m = j - i
    far, near = _sqrt_cell_weights(m, h)
    i = np.arange(j)
    np.add.at(w, i, far)
    np.add.at(w, i + 1, near)
    return w


def product_weights_sqrt_matrix(n: int, h: float) -> np.ndarray:
    """Row ``j`` holds :func:`product_weights_sqrt` for ``y = j*h``."""
    W = np.zeros((n + 1, n + 1))
    for j in range(1, n + 1):
        W[j] = product_weights_sqrt(j, n, h)
    return W
