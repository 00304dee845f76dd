"""Verification tools: manufactured solutions, residuals and convergence studies."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from . import kernels
from .field import GEOMETRY, FieldSolution, TraceField, reconstruct_field
from .kernels import KernelConfig
from .problem import A_DOMAIN, BC_DOMAIN, ProblemSpec, ValidatedProblem, parse_scalar_func, validate_problem
from .quadrature import GridFunction
from .traces import (
    CharacteristicData,
    Pipeline,
    SingularSystemError,
    TraceSet,
    TraceSolution,
    solve_problem,
)

__all__ = [
    "MmsCase",
    "mms_catalog",
    "mms_case",
    "ResidualReport",
    "residual_nonlocal",
    "interface_continuity",
    "pde_residuals",
    "volterra_residual",
    "ConvergenceTable",
    "convergence_study",
    "HomogeneousMode",
    "homogeneous_mode",
    "TRACE_NAMES",
]

TRACE_NAMES = ("tau1", "nu1", "tau2", "nu2", "tau3", "nu3", "phi1", "phi2", "phi3")
_GRIDS = {"phi1": (0.0, 0.5), "phi2": (0.5, 1.0), "phi3": (0.5, 1.0)}


def _const(c):
    return lambda z: np.full(np.shape(z), float(c))


# --- manufactured solutions -------------------------------------------------


@dataclass(frozen=True)
class MmsCase:
    """A manufactured solution and coefficients consistent with it.

    ``u[k]`` and ``grad[k]`` are the exact field and gradient in subdomain
    ``k``; ``exact`` maps every trace name to a callable.
    """

    name: str
    a: tuple[str, str, str]
    b: tuple[str, str, str]
    c: tuple[str, str, str]
    u: dict
    grad: dict
    exact: dict
    description: str = ""

    def spec(self, M: int = 64, K: int = 8, **params) -> ProblemSpec:
        return ProblemSpec.from_strings(self.a, self.b, self.c, M=M, K=K, **params)

    def problem(self, M: int = 64, K: int = 8, **params) -> ValidatedProblem:
        return validate_problem(self.spec(M, K, **params))

    def exact_traces(self, M: int) -> TraceSet:
        return TraceSet(**{k: GridFunction.sample(self.exact[k], 0.0, 1.0, M)
                           for k in ("tau1", "nu1", "tau2", "nu2", "tau3", "nu3")})

    def exact_chars(self, M: int) -> CharacteristicData:
        return CharacteristicData(**{k: GridFunction.sample(self.exact[k], *_GRIDS[k], M)
                                     for k in ("phi1", "phi2", "phi3")})

    def field_value(self, x, y):
        """Exact ``u`` at points of the closed domain."""
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        out = np.full(x.shape, np.nan)
        for k, check in enumerate((GEOMETRY.in_omega0, GEOMETRY.in_omega1,
                                   GEOMETRY.in_omega2, GEOMETRY.in_omega3)):
            sel = check(x, y, closed=True) & np.isnan(out)
            out[sel] = self.u[k](x[sel], y[sel])
        return out


def _constant_case(c12=("1", "1"), suffix=""):
    one, zero = _const(1.0), _const(0.0)
    u = {k: (lambda x, y: np.ones(np.shape(x))) for k in range(4)}
    grad = {k: (lambda x, y: (np.zeros(np.shape(x)), np.zeros(np.shape(x)))) for k in range(4)}
    exact = dict(tau1=one, nu1=zero, tau2=one, nu2=zero, tau3=one, nu3=zero,
                 phi1=one, phi2=one, phi3=zero)
    return MmsCase("constant" + suffix, ("1", "1", "2"), ("1", "1", "2"), (*c12, "0"),
                   u, grad, exact, "u = 1")


def _linear_case(c12=("1", "1"), suffix=""):
    c3 = str(float(c12[0]) + float(c12[1])).rstrip("0").rstrip(".")
    u = {k: (lambda x, y: np.asarray(x, float) + 0 * y) for k in range(4)}
    grad = {k: (lambda x, y: (np.ones(np.shape(x)), np.zeros(np.shape(x)))) for k in range(4)}
    exact = dict(tau1=lambda x: np.asarray(x, float), nu1=_const(0.0), tau2=_const(0.0),
                 nu2=_const(1.0), tau3=_const(1.0), nu3=_const(1.0),
                 phi1=lambda t: -np.asarray(t, float), phi2=lambda s: 2.0 - np.asarray(s, float),
                 phi3=_const(1.0))
    return MmsCase("linear" + suffix, ("1", "1", "0"), ("1", "1", "2"), (*c12, c3),
                   u, grad, exact, "u = x")


def _quadratic_case(c12=("1", "1"), suffix=""):
    c3 = str(2.0 * float(c12[0])).rstrip("0").rstrip(".")
    u = {
        0: lambda x, y: x**2 + 2 * y,
        1: lambda x, y: x**2 + y**2 + 2 * y,
        2: lambda x, y: 2 * y + 0 * x,
        3: lambda x, y: 2 * x + 2 * y - 1,
    }
    grad = {
        0: lambda x, y: (2 * x, 2 + 0 * y),
        1: lambda x, y: (2 * x, 2 * y + 2),
        2: lambda x, y: (0 * x, 2 + 0 * y),
        3: lambda x, y: (2 + 0 * x, 2 + 0 * y),
    }
    exact = dict(tau1=lambda x: np.asarray(x, float) ** 2, nu1=_const(2.0),
                 tau2=lambda y: 2 * np.asarray(y, float), nu2=_const(0.0),
                 tau3=lambda y: 1 + 2 * np.asarray(y, float), nu3=_const(2.0),
                 phi1=lambda t: 2 * np.asarray(t, float), phi2=lambda s: 5 - 4 * np.asarray(s, float),
                 phi3=_const(0.0))
    return MmsCase("quadratic" + suffix, ("1", "1", "2*t^2"), ("1", "1", "2*t^2-4*t+4"),
                   (*c12, c3), u, grad, exact,
                   "u = x^2+2y | x^2+y^2+2y | 2y | 2x+2y-1")


def mms_catalog(twins: bool = True) -> list[MmsCase]:
    """Manufactured cases: constant, linear, quadratic.

    With ``c1 = c2 = 1`` (the base cases) every coefficient pair is mirror
    symmetric and the homogeneous problem has a nontrivial solution, so the
    discrete system is singular there. The ``*-twin`` cases carry the same
    exact fields with ``c1 = 2, c2 = 1`` and a recomputed ``c3``.
    """
    cases = [_constant_case(), _linear_case(), _quadratic_case()]
    if twins:
        cases += [f(("2", "1"), "-twin") for f in (_constant_case, _linear_case, _quadratic_case)]
    return cases


def mms_case(name: str) -> MmsCase:
    for case in mms_catalog():
        if case.name == name:
            return case
    raise KeyError(f"unknown manufactured case {name!r}")


# --- residual reports ---------------------------------------------------


@dataclass
class ResidualReport:
    """Named residuals, each with its max and discrete L2 norm."""

    entries: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def add(self, name: str, values) -> None:
        v = np.abs(np.asarray(values, dtype=float)).ravel()
        if v.size == 0:
            raise ValueError(f"no samples for {name}")
        self.entries[name] = {"max": float(v.max()), "l2": float(np.sqrt(np.mean(v**2)))}

    def max(self, name: str) -> float:
        return self.entries[name]["max"]

    def worst(self) -> float:
        return max(e["max"] for e in self.entries.values())

    def merge(self, other: "ResidualReport") -> "ResidualReport":
        return ResidualReport({**self.entries, **other.entries}, {**self.params, **other.params})

    def to_flat(self) -> dict:
        out = {f"{k}_{n}": v for k, e in self.entries.items() for n, v in e.items()}
        out.update(self.params)
        return out


class _Evaluator:
    """Uniform access to ``u`` and its gradient in the three triangles."""

    def __init__(self, source):
        if isinstance(source, MmsCase):
            self.u, self.grad = source.u, source.grad
            return
        if isinstance(source, FieldSolution):
            tf = source.trace_field
        elif isinstance(source, TraceSolution):
            tf = TraceField(source.traces)
        elif isinstance(source, TraceSet):
            tf = TraceField(source)
        elif isinstance(source, TraceField):
            tf = source
        else:
            raise TypeError(f"cannot evaluate a field from {type(source).__name__}")
        self.u = {1: tf.omega1, 2: tf.omega2, 3: tf.omega3}
        self.grad = {1: tf.grad1, 2: tf.grad2, 3: tf.grad3}


def _default_probes(source) -> int:
    if isinstance(source, TraceSolution):
        return source.traces.tau1.n + 1
    if isinstance(source, TraceSet):
        return source.tau1.n + 1
    if isinstance(source, FieldSolution):
        return source.trace_field.traces.tau1.n + 1
    return 129


def residual_nonlocal(source, spec: ProblemSpec | ValidatedProblem, n_probe: int | None = None) -> ResidualReport:
    """Residuals of the three nonlocal conditions at ``n_probe`` uniform points.

    ``source`` is an :class:`MmsCase` (exact formulas), a trace set, a trace
    solution or a field. Derivatives along the characteristics come from the
    closed d'Alembert forms. With ``n_probe = M + 1`` the probes sit on the
    half-grid nodes of the traces, where linear interpolation is exact for
    the manufactured fields.
    """
    n_probe = n_probe or _default_probes(source)
    if n_probe < 3:
        raise ValueError("n_probe must be at least 3")
    ev = _Evaluator(source)
    ta = np.linspace(0.0, 0.5, n_probe)
    tb = np.linspace(0.5, 1.0, n_probe)
    ti = tb[1:-1]
    if not (np.all(GEOMETRY.in_omega2(-ta, ta, closed=True))
            and np.all(GEOMETRY.in_omega1(ta, -ta, closed=True))
            and np.all(GEOMETRY.in_omega1(tb, tb - 1, closed=True))
            and np.all(GEOMETRY.in_omega3(2 - tb, 1 - tb, closed=True))
            and np.all(GEOMETRY.in_omega2(ti - 1, ti, closed=True))
            and np.all(GEOMETRY.in_omega3(2 - ti, ti, closed=True))):
        raise AssertionError("probe outside its subdomain")  # bug guard

    f = spec.coefficients() if hasattr(spec, "coefficients") else spec.spec.coefficients()
    r2 = f["a1"](ta) * ev.u[2](-ta, ta) + f["a2"](ta) * ev.u[1](ta, -ta) - f["a3"](ta)
    r3 = f["b1"](tb) * ev.u[1](tb, tb - 1) + f["b2"](tb) * ev.u[3](2 - tb, 1 - tb) - f["b3"](tb)
    gx2, gy2 = ev.grad[2](ti - 1, ti)
    gx3, gy3 = ev.grad[3](2 - ti, ti)
    r4 = f["c1"](ti) * (gx2 + gy2) + f["c2"](ti) * (gx3 - gy3) - f["c3"](ti)
    rep = ResidualReport(params={"n_probe": n_probe})
    rep.add("cond_a", r2)
    rep.add("cond_b", r3)
    rep.add("cond_c", r4)
    return rep


def interface_continuity(fld: FieldSolution, traces: TraceSet | None = None,
                         n_probe: int | None = None) -> ResidualReport:
    """Value and normal-derivative mismatch across ``y = 0``, ``x = 0``, ``x = 1``.

    On the square side the normal derivative is a one-sided second-order
    difference of the heat grid; on the triangle side it comes from the
    d'Alembert gradient. Both are compared with the traces.
    """
    traces = traces or fld.trace_field.traces
    tf = fld.trace_field if traces is fld.trace_field.traces else TraceField(traces)
    heat = fld.heat
    s = heat.x if n_probe is None else np.linspace(0.0, 1.0, n_probe)
    if n_probe is not None:
        if not np.allclose(heat.x, heat.y):
            raise ValueError("interface probes need a square heat grid")
    idx = np.searchsorted(heat.x, s).clip(0, heat.x.size - 1)
    s = heat.x[idx]
    z = np.zeros_like(s)

    rep = ResidualReport(params={"n_probe": int(s.size)})
    # y = 0
    rep.add("u_jump_y0", np.concatenate([heat.u[0, idx] - traces.tau1(s), tf.omega1(s, z) - traces.tau1(s)]))
    rep.add("dn_jump_y0", np.concatenate([heat.dy_bottom()[idx] - traces.nu1(s),
                                          tf.grad1(s, z)[1] - traces.nu1(s)]))
    # x = 0 and x = 1, interior of the side (corners belong to y = 0)
    inner = idx[(s > 0) & (s < 1)]
    si = heat.y[inner]
    zi = np.zeros_like(si)
    rep.add("u_jump_x0", np.concatenate([heat.u[inner, 0] - traces.tau2(si), tf.omega2(zi, si) - traces.tau2(si)]))
    rep.add("dn_jump_x0", np.concatenate([heat.dx_left()[inner] - traces.nu2(si),
                                          tf.grad2(zi, si)[0] - traces.nu2(si)]))
    rep.add("u_jump_x1", np.concatenate([heat.u[inner, -1] - traces.tau3(si),
                                         tf.omega3(zi + 1, si) - traces.tau3(si)]))
    rep.add("dn_jump_x1", np.concatenate([heat.dx_right()[inner] - traces.nu3(si),
                                          tf.grad3(zi + 1, si)[0] - traces.nu3(si)]))
    return rep


def pde_residuals(fld: FieldSolution, d: float | None = None) -> ResidualReport:
    """Heat operator on the square grid and ``u_xx - u_yy`` stencils in the triangles."""
    rep = ResidualReport()
    rep.add("pde_omega0", fld.heat.heat_residual())
    h = d or 0.25 * (fld.heat.x[1] - fld.heat.x[0])
    tf = fld.trace_field
    g = np.linspace(0.05, 0.95, 19)
    centres = {
        1: (0.5 + 0.4 * (g - 0.5), -0.1 + 0 * g),
        2: (-0.1 + 0 * g, 0.5 + 0.4 * (g - 0.5)),
        3: (1.1 + 0 * g, 0.5 + 0.4 * (g - 0.5)),
    }
    for k, fn in ((1, tf.omega1), (2, tf.omega2), (3, tf.omega3)):
        x, y = centres[k]
        res = (fn(x + h, y) + fn(x - h, y) - fn(x, y + h) - fn(x, y - h)) / h**2
        rep.add(f"pde_omega{k}", res)
    return rep


def volterra_residual(sol: TraceSolution, problem: ValidatedProblem, n_probe: int = 9) -> ResidualReport:
    """A-posteriori residual of the two integral equations on the sides.

    The kernel integrals are recomputed with adaptive quadrature (algebraic
    weight at the endpoint singularity), independently of the collocation
    weights used by the solver.
    """
    cfg = KernelConfig(problem.K, problem.s_min)
    M = problem.M
    t2p = GridFunction(0.0, 1.0, sol.tau2p)
    t3p = GridFunction(0.0, 1.0, sol.tau3p)
    p = GridFunction(0.0, 1.0, sol.p)
    q = GridFunction(0.0, 1.0, sol.q)
    tau1 = sol.traces.tau1
    c0, c1 = problem.corners
    ys = np.linspace(0.0, 1.0, n_probe + 1)[1:]

    def conv(f, x, xi, y):
        if x == xi:
            g = lambda eta: f(eta) * kernels.n_scaled(x, xi, y - eta, cfg)
            return integrate.quad(g, 0.0, y, weight="alg", wvar=(0.0, -0.5), limit=200, points=None)[0]
        g = lambda eta: f(eta) * kernels.eval_n(x, y, xi, eta, cfg) if y - eta > cfg.s_min else 0.0
        return integrate.quad(g, 0.0, y, limit=200)[0]

    def forcing(x0, y):
        g = lambda xi: tau1(xi) * kernels.eval_gbar_dx(x0, y, xi, 0.0, cfg)
        val = integrate.quad(g, 0.0, 1.0, points=tau1.nodes[1:-1][:: max(1, M // 32)], limit=400)[0]
        return (val - c0 * kernels.eval_n(x0, y, 0.0, 0.0, cfg)
                + c1 * kernels.eval_n(x0, y, 1.0, 0.0, cfg))

    e1, e2 = [], []
    for y in ys:
        e1.append(t2p(y) + conv(t2p, 0.0, 0.0, y) - conv(t3p, 0.0, 1.0, y) - forcing(0.0, y) - p(y))
        e2.append(t3p(y) - conv(t3p, 1.0, 1.0, y) + conv(t2p, 1.0, 0.0, y) - forcing(1.0, y) + q(y))
    rep = ResidualReport(params={"volterra_probes": n_probe})
    rep.add("volterra_x0", e1)
    rep.add("volterra_x1", e2)
    return rep


# --- convergence ----------------------------------------------------------


@dataclass
class ConvergenceTable:
    """One row per grid; ``columns`` are the error / residual names."""

    case: str
    rows: list = field(default_factory=list)

    @property
    def columns(self) -> list[str]:
        return [k for k in self.rows[0] if k not in ("M",)] if self.rows else []

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    @property
    def grids(self) -> np.ndarray:
        return self.column("M")

    def orders(self, name: str) -> np.ndarray:
        """Observed orders ``log(e_k/e_{k+1}) / log(M_{k+1}/M_k)``."""
        e = self.column(name)
        M = self.grids
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(e[:-1] / e[1:]) / np.log(M[1:] / M[:-1])

    def converges(self, name: str, min_order: float = 1.0, floor: float = 0.0) -> bool:
        """Monotone decrease with order at least ``min_order``.

        Values at or below ``floor`` count as converged (rounding level), so
        a column that is exact to rounding passes.
        """
        e = self.column(name)
        if np.all(e <= floor):
            return True
        for k in range(e.size - 1):
            if e[k + 1] <= floor:
                continue
            if not e[k + 1] < e[k]:
                return False
            if self.orders(name)[k] < min_order:
                return False
        return True

    def to_csv_rows(self):
        header = ["M"] + self.columns
        for name in [c for c in self.columns if c.startswith("err_")]:
            header.append(f"order_{name[4:]}")
        yield header
        for k, row in enumerate(self.rows):
            line = [row["M"]] + [row[c] for c in self.columns]
            for name in [c for c in self.columns if c.startswith("err_")]:
                line.append(float("nan") if k == 0 else float(self.orders(name)[k - 1]))
            yield line


def _trace_errors(sol: TraceSolution, case: MmsCase) -> dict:
    out = {}
    grids = {**sol.traces.as_dict(), **sol.chars.as_dict()}
    for name in TRACE_NAMES:
        out[f"err_{name}"] = grids[name].max_abs_error(case.exact[name])
    return out


def convergence_study(target, M_list, K: int = 8, residuals: bool = True) -> ConvergenceTable:
    """Solve on each grid of ``M_list`` and tabulate errors and residuals.

    ``target`` is an :class:`MmsCase` (errors against the exact traces) or a
    :class:`ProblemSpec` (residuals and condition numbers only).
    """
    M_list = [int(m) for m in M_list]
    if any(m % 2 for m in M_list) or sorted(M_list) != M_list:
        raise ValueError("M_list must be ascending even integers")
    case = target if isinstance(target, MmsCase) else None
    table = ConvergenceTable(case.name if case else "spec")
    for M in M_list:
        spec = case.spec(M, K) if case else target.with_params(M=M, K=K)
        problem = validate_problem(spec)
        t0 = time.perf_counter()
        sol = solve_problem(problem)
        row = {"M": M}
        if case:
            row.update(_trace_errors(sol, case))
        if residuals:
            rep = residual_nonlocal(sol, spec)
            row.update({k: v["max"] for k, v in rep.entries.items()})
        row["cond"] = sol.diagnostics["cond"]
        row["seconds"] = time.perf_counter() - t0
        table.rows.append(row)
    return table


# --- non-uniqueness probe -----------------------------------------------


@dataclass(frozen=True)
class HomogeneousMode:
    """Smallest singular pair of the homogeneous collocation matrix."""

    sigma_min: float
    sigma_max: float
    traces: dict

    @property
    def ratio(self) -> float:
        return self.sigma_min / self.sigma_max


def homogeneous_mode(spec: ProblemSpec) -> HomogeneousMode:
    """Traces of the (near-)null vector of the problem with zero right sides.

    A tiny ``sigma_min / sigma_max`` together with a grid-independent mode
    indicates a nontrivial solution of the homogeneous problem. The mode is
    normalised so that ``max |p| = 1``.
    """
    hom = spec.with_params(a3=parse_scalar_func("0", A_DOMAIN), b3=parse_scalar_func("0", BC_DOMAIN),
                           c3=parse_scalar_func("0", BC_DOMAIN))
    problem = validate_problem(hom)
    pl = Pipeline(problem)
    A = pl.linearize(pl.residual).matrix
    _, sv, vt = np.linalg.svd(A)
    z = vt[-1]
    p, q = z[: pl.M + 1], z[pl.M + 1:]
    scale = p[np.argmax(np.abs(p))]
    if scale == 0:
        scale = 1.0
    tr = pl.traces(p / scale, q / scale)
    return HomogeneousMode(float(sv[-1]), float(sv[0]), tr)
