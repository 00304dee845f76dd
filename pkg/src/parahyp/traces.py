"""Interface traces and the collocation system that determines them.

The unknowns are two functions sampled on the master grid ``y_j = j/M``:

* ``p(y) = phi1'(y/2)``, slope of ``u`` along the characteristic ``x = -y``
  through A, on ``[0, 1/2]`` in its own variable;
* ``q(y) = phi3((y+1)/2)``, the value of ``u_x - u_y`` on the upper edge of
  the right triangle.

Every other trace is an affine function of ``(p, q)``. The pipeline below
maps ``(p, q)`` to all traces, and the two Volterra equations on ``x = 0``
and ``x = 1`` are collocated at ``y_1..y_M``. Because each step is affine
and the pipeline works on stacks of column vectors, the system matrix is
obtained by pushing the identity through it.

Grid layout (``h = 1/M``): ``phi1`` lives on ``s_j = j h/2`` in
``[0, 1/2]``; ``phi2`` and ``phi3`` on ``s_j = 1/2 + j h/2``. Then
``phi1(t/2)``, ``phi3((t+1)/2)`` and ``phi2'((2-t)/2)`` at ``t = y_j`` are
the entries ``j``, ``j`` and ``M - j``, so no interpolation is needed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from . import kernels
from .kernels import KernelConfig
from .ode_bvp import green_solve
from .problem import ValidatedProblem
from .quadrature import (
    GridFunction,
    cumtrapz_matrix,
    diff_matrix,
    product_weights_sqrt_matrix,
    trapz_weights,
)

__all__ = [
    "TraceSet",
    "CharacteristicData",
    "AffineMap",
    "UnknownLayout",
    "DiscreteSystem",
    "TraceSolution",
    "SingularSystemError",
    "rel_nu1",
    "rel_phi2",
    "rel_tau2p",
    "rel_nu2",
    "rel_tau3p",
    "rel_nu3",
    "tau1_map",
    "assemble_F",
    "assemble_global_system",
    "solve_system",
    "solve_problem",
    "Pipeline",
]

logger = logging.getLogger(__name__)

COND_LIMIT = 1e13


class SingularSystemError(ArithmeticError):
    """The collocation matrix cannot be factorised (problem not uniquely solvable
    at this discretisation)."""


@dataclass(frozen=True)
class TraceSet:
    tau1: GridFunction
    nu1: GridFunction
    tau2: GridFunction
    nu2: GridFunction
    tau3: GridFunction
    nu3: GridFunction

    def as_dict(self) -> dict[str, GridFunction]:
        return {k: getattr(self, k) for k in ("tau1", "nu1", "tau2", "nu2", "tau3", "nu3")}

    def corner_mismatch(self) -> float:
        return max(
            abs(self.tau2.values[0] - self.tau1.values[0]),
            abs(self.tau3.values[0] - self.tau1.values[-1]),
        )


@dataclass(frozen=True)
class CharacteristicData:
    phi1: GridFunction
    phi2: GridFunction
    phi3: GridFunction

    def as_dict(self) -> dict[str, GridFunction]:
        return {"phi1": self.phi1, "phi2": self.phi2, "phi3": self.phi3}


@dataclass(frozen=True)
class AffineMap:
    """``z -> matrix @ z + offset``."""

    matrix: np.ndarray
    offset: np.ndarray

    def __call__(self, z):
        return self.matrix @ np.asarray(z, dtype=float) + self.offset


@dataclass(frozen=True)
class UnknownLayout:
    """Unknown ``i < M+1`` is ``p_i``; unknown ``M+1+j`` is ``q_j``."""

    M: int

    @property
    def size(self) -> int:
        return 2 * (self.M + 1)

    def index(self, name: str, j: int) -> int:
        if not 0 <= j <= self.M:
            raise IndexError(j)
        return j if name == "p" else self.M + 1 + j

    def label(self, i: int) -> tuple[str, int]:
        return ("p", i) if i <= self.M else ("q", i - self.M - 1)

    def split(self, z):
        z = np.asarray(z)
        return z[: self.M + 1], z[self.M + 1 :]


@dataclass(frozen=True)
class DiscreteSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    layout: UnknownLayout
    cond: float

    @cached_property
    def lu(self):
        return scipy.linalg.lu_factor(self.matrix, check_finite=True)


@dataclass(frozen=True)
class TraceSolution:
    traces: TraceSet
    chars: CharacteristicData
    p: np.ndarray
    q: np.ndarray
    tau2p: np.ndarray
    tau3p: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def _col(coef: np.ndarray, like: np.ndarray) -> np.ndarray:
    return np.reshape(coef, (-1,) + (1,) * (np.ndim(like) - 1))


class Pipeline:
    """Precomputed samples and operators for one problem at its grid size."""

    def __init__(self, problem: ValidatedProblem):
        self.problem = problem
        M = self.M = problem.M
        self.h = 1.0 / M
        self.cfg = KernelConfig(problem.K, problem.s_min)
        self.y = np.linspace(0.0, 1.0, M + 1)
        self.s_lower = np.linspace(0.0, 0.5, M + 1)
        self.s_upper = np.linspace(0.5, 1.0, M + 1)
        self.a = [f(self.s_lower) for f in (problem.a1, problem.a2, problem.a3)]
        self.b = [f(self.s_upper) for f in (problem.b1, problem.b2, problem.b3)]
        self.c = [f(self.s_upper) for f in (problem.c1, problem.c2, problem.c3)]
        self.corners = problem.corners
        self.D = diff_matrix(M, self.h)
        self.D_half = diff_matrix(M, 0.5 * self.h)
        self.C_half = cumtrapz_matrix(M, 0.5 * self.h)
        self.C = cumtrapz_matrix(M, self.h)

    # --- pipeline from (p, q) to traces -----------------------------------

    def phi1(self, p):
        return self.corners.tau1_at_0 + self.C_half @ p

    def A(self, phi1):
        """``A(t) = u(t/2, -t/2)`` on the master grid."""
        a1, a2, a3 = (_col(v, phi1) for v in self.a)
        return (a3 - a1 * phi1) / a2

    def traces(self, p, q) -> dict[str, np.ndarray]:
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        phi1 = self.phi1(p)
        A = self.A(phi1)
        r = -2.0 * (self.D @ A)
        tau1 = green_solve(r, self.corners)
        nu1 = self.D @ tau1 + r
        phi2 = _phi2_from(tau1, A, self.b)
        dphi2 = self.D_half @ phi2
        tau3p = _tau3p(dphi2, q)
        nu3 = _nu3(dphi2, q)
        tau2p = _tau2p(p, q, self.c)
        nu2 = tau2p - p
        tau2 = self.corners.tau1_at_0 + self.C @ tau2p
        tau3 = self.corners.tau1_at_1 + self.C @ tau3p
        return dict(
            phi1=phi1, phi2=phi2, phi3=q, tau1=tau1, nu1=nu1,
            tau2p=tau2p, nu2=nu2, tau2=tau2, tau3p=tau3p, nu3=nu3, tau3=tau3,
        )

    # --- kernel operators --------------------------------------------------

    @cached_property
    def volterra(self) -> dict[str, np.ndarray]:
        """Quadrature matrices of the four ``∫_0^{y_j} f(eta) N(x, y_j, xi, eta) deta``."""
        M, h, cfg = self.M, self.h, self.cfg
        s = self.y[:, None] - self.y[None, :]
        lower = s > 0
        s_pos = np.where(lower, s, 1.0)
        Wsqrt = product_weights_sqrt_matrix(M, h)
        Wtrap = np.zeros((M + 1, M + 1))
        for j in range(1, M + 1):
            Wtrap[j, : j + 1] = trapz_weights(j, h)
        out = {}
        for name, x, xi in (("d0", 0.0, 0.0), ("c0", 0.0, 1.0), ("d1", 1.0, 1.0), ("c1", 1.0, 0.0)):
            if x == xi:
                smooth = kernels.n_scaled(x, xi, np.where(s >= 0, s, 0.0), cfg)
                out[name] = Wsqrt * np.where(s >= 0, smooth, 0.0)
            else:
                ker = np.where(lower, kernels.n_scaled(x, xi, s_pos, cfg) / np.sqrt(s_pos), 0.0)
                out[name] = Wtrap * ker
        return out

    @cached_property
    def forcing(self) -> dict[str, np.ndarray]:
        """Row ``j >= 1``: weights for the ``tau1`` integrals and corner kernel values."""
        cfg = self.cfg
        y = self.y[1:]
        out = {}
        for x0 in (0, 1):
            G = np.zeros((self.M + 1, self.M + 1))
            G[1:] = kernels.gbar_dx_moment_weights(float(x0), y, self.y, cfg)
            out[f"gx{x0}"] = G
            for xi in (0, 1):
                v = np.zeros(self.M + 1)
                v[1:] = kernels.eval_n(float(x0), y, float(xi), 0.0, cfg)
                out[f"n{x0}{xi}"] = v
        return out

    def F(self, tr: dict, p, q):
        """``(F1, F2)`` at the master nodes (entry 0 is unused and set to 0)."""
        f = self.forcing
        c0, c1 = self.corners
        tau1 = tr["tau1"]
        F1 = f["gx0"] @ tau1 - _col(c0 * f["n00"] - c1 * f["n01"], tau1) + p
        F2 = f["gx1"] @ tau1 - _col(c0 * f["n10"] - c1 * f["n11"], tau1) - q
        F1[0] = 0.0
        F2[0] = 0.0
        return F1, F2

    def residual(self, p, q):
        """Collocation residual, layout matching :class:`UnknownLayout`."""
        tr = self.traces(p, q)
        W = self.volterra
        F1, F2 = self.F(tr, p, q)
        t2, t3 = tr["tau2p"], tr["tau3p"]
        e1 = t2 + W["d0"] @ t2 - W["c0"] @ t3 - F1
        e2 = t3 - W["d1"] @ t3 + W["c1"] @ t2 - F2
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        # closure at y = 0 by linear extrapolation
        e1[0] = p[0] - 2.0 * p[1] + p[2]
        e2[0] = q[0] - 2.0 * q[1] + q[2]
        return np.concatenate([e1, e2], axis=0)

    def linearize(self, fn):
        """Affine map of ``fn(p, q)`` in ``z = (p, q)`` via unit vectors."""
        n = self.M + 1
        Z = np.hstack([np.zeros((2 * n, 1)), np.eye(2 * n)])
        out = fn(Z[:n], Z[n:])
        offset = out[:, 0].copy()
        return AffineMap(out[:, 1:] - offset[:, None], offset)


def _phi2_from(tau1, A, b):
    """Invert the relation on y = 0 for ``phi2`` on the upper half grid.

    With ``Phi(s) = u(s, s-1) = (b3 - b2 phi2)/b1`` the integrated relation
    reads ``Phi((t+1)/2) = tau1(t) + A(1) - A(t)``, anchored by
    ``phi2(1) = tau1(1)``.
    """
    b1, b2, b3 = (_col(v, tau1) for v in b)
    Phi = tau1 + A[-1] - A
    return (b3 - b1 * Phi) / b2


def _tau2p(p, q, c):
    c1, c2, c3 = (_col(v, q) for v in c)
    return 0.5 * (p + (c3 - c2 * q) / c1)


def _reverse(v):
    return v[::-1]


def _tau3p(dphi2, q):
    return -0.5 * (_reverse(dphi2) + q)


def _nu3(dphi2, q):
    return 0.5 * (q - _reverse(dphi2))


# --- public relation operators on grid functions --------------------------


def _check_grid(f: GridFunction, lo: float, hi: float, M: int, name: str):
    if f.n != M or abs(f.lo - lo) > 1e-15 or abs(f.hi - hi) > 1e-15:
        raise ValueError(f"{name} must be sampled on [{lo}, {hi}] with {M} steps")


def rel_nu1(tau1: GridFunction, phi1: GridFunction, problem: ValidatedProblem) -> GridFunction:
    """Normal derivative on y = 0 from the first nonlocal condition."""
    pl = Pipeline(problem)
    _check_grid(tau1, 0.0, 1.0, pl.M, "tau1")
    _check_grid(phi1, 0.0, 0.5, pl.M, "phi1")
    A = pl.A(phi1.values)
    return GridFunction(0.0, 1.0, pl.D @ tau1.values - 2.0 * (pl.D @ A))


def rel_phi2(tau1: GridFunction, phi1: GridFunction, problem: ValidatedProblem) -> GridFunction:
    pl = Pipeline(problem)
    _check_grid(tau1, 0.0, 1.0, pl.M, "tau1")
    _check_grid(phi1, 0.0, 0.5, pl.M, "phi1")
    return GridFunction(0.5, 1.0, _phi2_from(tau1.values, pl.A(phi1.values), pl.b))


def rel_tau2p(p: GridFunction, q: GridFunction, problem: ValidatedProblem) -> GridFunction:
    """``tau2'`` on the master grid from ``p = phi1'(y/2)`` and ``q = phi3((y+1)/2)``."""
    pl = Pipeline(problem)
    return GridFunction(0.0, 1.0, _tau2p(p.values, q.values, pl.c))


def rel_nu2(tau2p: GridFunction, p: GridFunction) -> GridFunction:
    return GridFunction(0.0, 1.0, tau2p.values - p.values)


def rel_tau3p(phi2: GridFunction, q: GridFunction) -> GridFunction:
    dphi2 = diff_matrix(phi2.n, phi2.step) @ phi2.values
    return GridFunction(0.0, 1.0, _tau3p(dphi2, q.values))


def rel_nu3(phi2: GridFunction, q: GridFunction) -> GridFunction:
    dphi2 = diff_matrix(phi2.n, phi2.step) @ phi2.values
    return GridFunction(0.0, 1.0, _nu3(dphi2, q.values))


# --- assembly and solve -------------------------------------------------


def tau1_map(problem: ValidatedProblem) -> AffineMap:
    """``tau1`` nodal values as an affine function of ``z = (p, q)``."""
    pl = Pipeline(problem)
    return pl.linearize(lambda p, q: pl.traces(p, q)["tau1"])


def assemble_F(problem: ValidatedProblem) -> tuple[AffineMap, AffineMap]:
    """Forcing terms of the two Volterra equations as affine maps in ``(p, q)``."""
    pl = Pipeline(problem)
    F1 = pl.linearize(lambda p, q: pl.F(pl.traces(p, q), p, q)[0])
    F2 = pl.linearize(lambda p, q: pl.F(pl.traces(p, q), p, q)[1])
    return F1, F2


def assemble_global_system(problem: ValidatedProblem, pipeline: Pipeline | None = None) -> DiscreteSystem:
    pl = pipeline or Pipeline(problem)
    amap = pl.linearize(pl.residual)
    A = amap.matrix
    if not np.all(np.isfinite(A)) or not np.all(np.isfinite(amap.offset)):
        raise SingularSystemError("non-finite entries in the collocation system")
    cond = float(np.linalg.cond(A))
    return DiscreteSystem(A, -amap.offset, UnknownLayout(pl.M), cond)


def solve_system(system: DiscreteSystem) -> np.ndarray:
    if not np.isfinite(system.cond) or system.cond > COND_LIMIT:
        raise SingularSystemError(
            f"problem not uniquely solvable at this discretization (cond={system.cond:.3g})"
        )
    try:
        lu = system.lu
    except (ValueError, np.linalg.LinAlgError) as exc:  # pragma: no cover - guarded by cond
        raise SingularSystemError(str(exc)) from exc
    if np.any(np.diag(lu[0]) == 0):
        raise SingularSystemError("problem not uniquely solvable at this discretization")
    return scipy.linalg.lu_solve(lu, system.rhs)


def solve_problem(problem: ValidatedProblem) -> TraceSolution:
    """Solve for ``(p, q)`` and recover every trace and characteristic function."""
    pl = Pipeline(problem)
    system = assemble_global_system(problem, pl)
    z = solve_system(system)
    p, q = system.layout.split(z)
    tr = pl.traces(p, q)
    residual = system.matrix @ z - system.rhs

    M = pl.M
    traces = TraceSet(
        tau1=GridFunction(0.0, 1.0, tr["tau1"]),
        nu1=GridFunction(0.0, 1.0, tr["nu1"]),
        tau2=GridFunction(0.0, 1.0, tr["tau2"]),
        nu2=GridFunction(0.0, 1.0, tr["nu2"]),
        tau3=GridFunction(0.0, 1.0, tr["tau3"]),
        nu3=GridFunction(0.0, 1.0, tr["nu3"]),
    )
    chars = CharacteristicData(
        phi1=GridFunction(0.0, 0.5, tr["phi1"]),
        phi2=GridFunction(0.5, 1.0, tr["phi2"]),
        phi3=GridFunction(0.5, 1.0, tr["phi3"]),
    )
    diagnostics = {
        "M": M,
        "K": pl.cfg.K,
        "cond": system.cond,
        "truncation_bound": kernels.truncation_bound(pl.cfg.K, 1.0),
        "system_residual_max": float(np.max(np.abs(residual))),
        "corner_mismatch": traces.corner_mismatch(),
    }
    logger.debug("solved M=%d cond=%.3g", M, system.cond)
    return TraceSolution(traces, chars, p, q, tr["tau2p"], tr["tau3p"], diagnostics)
