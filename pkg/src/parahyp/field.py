"""Reconstruction of ``u`` on the whole domain from its interface traces.

The domain consists of the unit square (heat equation) and three
characteristic triangles (wave equation) glued along ``y = 0``, ``x = 0`` and
``x = 1``:

    Omega0 = (0,1) x (0,1)
    Omega1 = {0 < x < 1, max(-x, x-1) < y < 0}          apex (1/2, -1/2)
    Omega2 = {-1/2 < x < 0, -x < y < x+1}               apex (-1/2, 1/2)
    Omega3 = {1 < x < 3/2, x-1 < y < 2-x}               apex (3/2, 1/2)

In the triangles ``u`` is the d'Alembert solution of the Cauchy problem with
data on the shared side. In the square it solves the first boundary problem,
either by Crank-Nicolson (:func:`heat_field_cn`) or by the Green's
representation (:func:`heat_field_kernel`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from . import kernels
from .kernels import KernelConfig
from .quadrature import GridFunction, diff_nodal
from .traces import TraceSet

__all__ = [
    "DomainGeometry",
    "GEOMETRY",
    "TraceField",
    "HeatGrid",
    "FieldSolution",
    "eval_omega1",
    "eval_omega2",
    "eval_omega3",
    "heat_field_cn",
    "heat_field_kernel",
    "reconstruct_field",
]

_TOL = 1e-12


@dataclass(frozen=True)
class DomainGeometry:
    A: tuple = (0.0, 0.0)
    B: tuple = (1.0, 0.0)
    A0: tuple = (0.0, 1.0)
    B0: tuple = (1.0, 1.0)
    apex1: tuple = (0.5, -0.5)
    apex2: tuple = (-0.5, 0.5)
    apex3: tuple = (1.5, 0.5)

    # ids used in field output
    OMEGA0, OMEGA1, OMEGA2, OMEGA3 = 0, 1, 2, 3
    LINE_AB, LINE_AA0, LINE_BB0 = 4, 5, 6
    OUTSIDE = -1

    @staticmethod
    def in_omega0(x, y, closed=False):
        t = _TOL if closed else 0.0
        x, y = np.asarray(x), np.asarray(y)
        if closed:
            return (x >= -t) & (x <= 1 + t) & (y >= -t) & (y <= 1 + t)
        return (x > 0) & (x < 1) & (y > 0) & (y < 1)

    @staticmethod
    def in_omega1(x, y, closed=False):
        x, y = np.asarray(x), np.asarray(y)
        if closed:
            return (y <= _TOL) & (y >= np.maximum(-x, x - 1) - _TOL)
        return (x > 0) & (x < 1) & (y < 0) & (y > np.maximum(-x, x - 1))

    @staticmethod
    def in_omega2(x, y, closed=False):
        x, y = np.asarray(x), np.asarray(y)
        if closed:
            return (x <= _TOL) & (y >= -x - _TOL) & (y <= x + 1 + _TOL)
        return (x > -0.5) & (x < 0) & (y > -x) & (y < x + 1)

    @staticmethod
    def in_omega3(x, y, closed=False):
        x, y = np.asarray(x), np.asarray(y)
        if closed:
            return (x >= 1 - _TOL) & (y >= x - 1 - _TOL) & (y <= 2 - x + _TOL)
        return (x > 1) & (x < 1.5) & (y > x - 1) & (y < 2 - x)

    def locate(self, x, y):
        """Subdomain id of each point: 0..3, a shared line 4..6, or -1 outside."""
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        out = np.full(x.shape, self.OUTSIDE, dtype=int)
        out[self.in_omega0(x, y)] = self.OMEGA0
        out[self.in_omega1(x, y)] = self.OMEGA1
        out[self.in_omega2(x, y)] = self.OMEGA2
        out[self.in_omega3(x, y)] = self.OMEGA3
        out[(y == 0) & (x > 0) & (x < 1)] = self.LINE_AB
        out[(x == 0) & (y > 0) & (y < 1)] = self.LINE_AA0
        out[(x == 1) & (y > 0) & (y < 1)] = self.LINE_BB0
        return out


GEOMETRY = DomainGeometry()


def _require(mask, name):
    if not np.all(mask):
        raise ValueError(f"point outside closed subdomain {name}")


class TraceField:
    """d'Alembert evaluators for the three triangles, built from a :class:`TraceSet`.

    Trace values are interpolated linearly between nodes; the integrals of
    ``nu`` are exact for the interpolant. Derivatives of ``tau`` come from
    :func:`~parahyp.quadrature.diff_nodal`.
    """

    def __init__(self, traces: TraceSet):
        self.traces = traces
        self.dtau = {k: diff_nodal(getattr(traces, k)) for k in ("tau1", "tau2", "tau3")}

    def omega1(self, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        _require(GEOMETRY.in_omega1(x, y, closed=True), "Omega1")
        tr = self.traces
        return 0.5 * (tr.tau1(x + y) + tr.tau1(x - y)) + 0.5 * tr.nu1.integral(x - y, x + y)

    def omega2(self, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        _require(GEOMETRY.in_omega2(x, y, closed=True), "Omega2")
        tr = self.traces
        return 0.5 * (tr.tau2(y + x) + tr.tau2(y - x)) + 0.5 * tr.nu2.integral(y - x, y + x)

    def omega3(self, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        _require(GEOMETRY.in_omega3(x, y, closed=True), "Omega3")
        tr = self.traces
        a, b = y + x - 1, y - x + 1
        return 0.5 * (tr.tau3(a) + tr.tau3(b)) + 0.5 * tr.nu3.integral(b, a)

    def grad1(self, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        _require(GEOMETRY.in_omega1(x, y, closed=True), "Omega1")
        d, nu = self.dtau["tau1"], self.traces.nu1
        p, m = x + y, x - y
        return (0.5 * (d(p) + d(m)) + 0.5 * (nu(p) - nu(m)),
                0.5 * (d(p) - d(m)) + 0.5 * (nu(p) + nu(m)))

    def grad2(self, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        _require(GEOMETRY.in_omega2(x, y, closed=True), "Omega2")
        d, nu = self.dtau["tau2"], self.traces.nu2
        p, m = y + x, y - x
        return (0.5 * (d(p) - d(m)) + 0.5 * (nu(p) + nu(m)),
                0.5 * (d(p) + d(m)) + 0.5 * (nu(p) - nu(m)))

    def grad3(self, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        _require(GEOMETRY.in_omega3(x, y, closed=True), "Omega3")
        d, nu = self.dtau["tau3"], self.traces.nu3
        a, b = y + x - 1, y - x + 1
        return (0.5 * (d(a) - d(b)) + 0.5 * (nu(a) + nu(b)),
                0.5 * (d(a) + d(b)) + 0.5 * (nu(a) - nu(b)))

    # characteristic derivatives used by the derivative condition
    def dplus2(self, x, y):
        """``u_x + u_y`` in Omega2; depends on ``y + x`` only."""
        ux, uy = self.grad2(x, y)
        return ux + uy

    def dminus3(self, x, y):
        """``u_x - u_y`` in Omega3; depends on ``y - x + 1`` only."""
        ux, uy = self.grad3(x, y)
        return ux - uy


def eval_omega1(traces: TraceSet, x, y):
    return TraceField(traces).omega1(x, y)


def eval_omega2(traces: TraceSet, x, y):
    return TraceField(traces).omega2(x, y)


def eval_omega3(traces: TraceSet, x, y):
    return TraceField(traces).omega3(x, y)


# --- the square ---------------------------------------------------------


@dataclass(frozen=True)
class HeatGrid:
    """Samples ``u[k, i]`` at ``(x[i], y[k])`` on a tensor grid of the closed square."""

    x: np.ndarray
    y: np.ndarray
    u: np.ndarray

    def __call__(self, xq, yq):
        """Bilinear interpolation."""
        from scipy.interpolate import RegularGridInterpolator

        f = RegularGridInterpolator((self.y, self.x), self.u)
        xq, yq = np.broadcast_arrays(np.asarray(xq, float), np.asarray(yq, float))
        return f(np.stack([yq.ravel(), xq.ravel()], axis=-1)).reshape(xq.shape)

    def dx_left(self):
        """One-sided second-order ``u_x`` on ``x = 0`` at every ``y``."""
        h = self.x[1] - self.x[0]
        return (-3 * self.u[:, 0] + 4 * self.u[:, 1] - self.u[:, 2]) / (2 * h)

    def dx_right(self):
        h = self.x[1] - self.x[0]
        return (3 * self.u[:, -1] - 4 * self.u[:, -2] + self.u[:, -3]) / (2 * h)

    def dy_bottom(self):
        k = self.y[1] - self.y[0]
        return (-3 * self.u[0] + 4 * self.u[1] - self.u[2]) / (2 * k)

    def heat_residual(self):
        """``u_y - u_xx`` by central differences at interior nodes."""
        h = self.x[1] - self.x[0]
        k = self.y[1] - self.y[0]
        u = self.u
        uy = (u[2:, 1:-1] - u[:-2, 1:-1]) / (2 * k)
        uxx = (u[1:-1, 2:] - 2 * u[1:-1, 1:-1] + u[1:-1, :-2]) / h**2
        return uy - uxx


def heat_field_cn(tau1: GridFunction, tau2: GridFunction, tau3: GridFunction,
                  nx: int, ny: int) -> HeatGrid:
    """Crank-Nicolson in ``y`` for ``u_y = u_xx`` with Dirichlet data.

    Initial row ``tau1``, sides ``tau2`` (x = 0) and ``tau3`` (x = 1); the
    traces are interpolated linearly onto the ``(nx+1) x (ny+1)`` grid.
    """
    if nx < 16 or ny < 16:
        raise ValueError("need nx, ny >= 16")
    x = np.linspace(0.0, 1.0, nx + 1)
    y = np.linspace(0.0, 1.0, ny + 1)
    h, k = 1.0 / nx, 1.0 / ny
    lam = k / h**2
    m = nx - 1
    ab = np.zeros((3, m))
    ab[0, 1:] = -0.5 * lam
    ab[1, :] = 1.0 + lam
    ab[2, :-1] = -0.5 * lam
    left, right = tau2(y), tau3(y)
    u = np.empty((ny + 1, nx + 1))
    u[0] = tau1(x)
    u[:, 0] = left
    u[:, -1] = right
    for j in range(ny):
        prev = u[j]
        rhs = (1.0 - lam) * prev[1:-1] + 0.5 * lam * (prev[:-2] + prev[2:])
        rhs[0] += 0.5 * lam * left[j + 1]
        rhs[-1] += 0.5 * lam * right[j + 1]
        u[j + 1, 1:-1] = solve_banded((1, 1), ab, rhs)
    return HeatGrid(x, y, u)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def _gauss_panels(breaks):
    """Gauss-Legendre nodes and weights on consecutive panels of ``breaks``."""
    breaks = np.unique(breaks)
    a, b = breaks[:-1, None], breaks[1:, None]
    nodes = 0.5 * (b - a) * _GL_X[None, :] + 0.5 * (a + b)
    weights = 0.5 * (b - a) * _GL_W[None, :]
    return nodes.ravel(), weights.ravel()


def heat_field_kernel(tau1: GridFunction, tau2: GridFunction, tau3: GridFunction,
                      x: float, y: float, cfg: KernelConfig = KernelConfig()) -> float:
    """Green's representation of the first boundary problem at an interior point.

    ``u = ∫ Gbar(x,y,xi,0) tau1 dxi + ∫ Gbar_xi(x,y,0,eta) tau2 deta
    - ∫ Gbar_xi(x,y,1,eta) tau3 deta``. Panels follow the trace nodes and are
    graded toward ``eta = y`` and ``xi = x``, where the integrands concentrate.
    """
    x, y = float(x), float(y)
    if not (0 < x < 1 and 0 < y <= 1) or y < 10 * cfg.s_min:
        raise ValueError("heat_field_kernel needs an interior point of the square")
    sq = np.sqrt(y)
    xb = np.concatenate([tau1.nodes, x + sq * np.array([-8, -4, -2, -1, -0.5, 0, 0.5, 1, 2, 4, 8])])
    xi, wx = _gauss_panels(np.clip(xb, 0.0, 1.0))
    u = np.dot(wx, kernels.eval_gbar(x, y, xi, 0.0, cfg) * tau1(xi))

    # the eta-integrand vanishes to all orders at eta = y for interior x;
    # the last 1e-10 * y is dropped
    s_cut = max(1e-10 * y, 10 * cfg.s_min)
    nodes = np.concatenate([tau2.nodes[tau2.nodes < y], [0.0, y - s_cut]])
    grade = y - y * 0.5 ** np.arange(1, 34)
    eb = np.concatenate([nodes, grade[grade < y - s_cut]])
    eta, we = _gauss_panels(np.clip(eb, 0.0, y - s_cut))
    k0 = kernels.eval_gbar_dxi(x, y, 0.0, eta, cfg)
    k1 = kernels.eval_gbar_dxi(x, y, 1.0, eta, cfg)
    u += np.dot(we, k0 * tau2(eta)) - np.dot(we, k1 * tau3(eta))
    return float(u)


# --- assembled field ----------------------------------------------------


@dataclass
class FieldSolution:
    """Samples of ``u`` per subdomain with provenance.

    ``samples[id]`` is a tuple ``(x, y, u)`` of flat arrays; id as in
    :class:`DomainGeometry`.
    """

    samples: dict
    heat: HeatGrid
    trace_field: TraceField
    meta: dict = field(default_factory=dict)

    def rows(self):
        """Long-format rows ``(x, y, subdomain_id, u)`` in a fixed order."""
        for sid in sorted(self.samples):
            xs, ys, us = self.samples[sid]
            for xv, yv, uv in zip(xs, ys, us):
                yield float(xv), float(yv), sid, float(uv)

    def value(self, x, y):
        """Evaluate anywhere in the closed domain (square via bilinear interpolation)."""
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        out = np.full(x.shape, np.nan)
        tf = self.trace_field
        sel = GEOMETRY.in_omega0(x, y, closed=True)
        if sel.any():
            out[sel] = self.heat(x[sel], y[sel])
        for check, fn in ((GEOMETRY.in_omega1, tf.omega1), (GEOMETRY.in_omega2, tf.omega2),
                          (GEOMETRY.in_omega3, tf.omega3)):
            sel = check(x, y, closed=True) & np.isnan(out)
            if sel.any():
                out[sel] = fn(x[sel], y[sel])
        if np.isnan(out).any():
            raise ValueError("point outside the domain")
        return out


def _triangle_grid(n, region):
    """Nodes of the closed triangle on a grid of spacing ``1/n``."""
    g = np.arange(-n // 2, 3 * n // 2 + 1) / n
    X, Y = np.meshgrid(g, g)
    X, Y = X.ravel(), Y.ravel()
    in_closed = getattr(GEOMETRY, f"in_omega{region}")(X, Y, closed=True)
    keep = in_closed & ~GEOMETRY.in_omega0(X, Y, closed=True)
    return X[keep], Y[keep]


def reconstruct_field(traces: TraceSet, n: int | None = None, K: int = 8) -> FieldSolution:
    """Sample ``u`` on all four subdomains.

    The square uses Crank-Nicolson on an ``n x n`` grid (default: the trace
    grid size); the triangles use the d'Alembert evaluators on nodes of the
    same spacing that lie strictly outside the closed square.
    """
    n = n or traces.tau1.n
    if n % 2:
        n += 1
    heat = heat_field_cn(traces.tau1, traces.tau2, traces.tau3, n, n)
    tf = TraceField(traces)
    X, Y = np.meshgrid(heat.x, heat.y)
    samples = {GEOMETRY.OMEGA0: (X.ravel(), Y.ravel(), heat.u.ravel())}
    for region, fn in ((1, tf.omega1), (2, tf.omega2), (3, tf.omega3)):
        xs, ys = _triangle_grid(n, region)
        samples[region] = (xs, ys, fn(xs, ys))
    meta = {"n": n, "M": traces.tau1.n, "K": K, "omega0_method": "crank-nicolson"}
    return FieldSolution(samples, heat, tf, meta)
