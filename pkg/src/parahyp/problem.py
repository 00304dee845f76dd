"""Problem instances: the nine coefficient functions and their validation.

A problem is fixed by three coefficient triples,

* ``a1, a2, a3`` on ``[0, 1/2]`` (condition on the characteristics through A),
* ``b1, b2, b3`` on ``[1/2, 1]`` (condition on the characteristics through B),
* ``c1, c2, c3`` on ``[1/2, 1]`` (derivative condition on the upper edges),

plus the discretisation parameters. Coefficients are given either as
expression text (see :mod:`parahyp.expr`) or as uniform tables.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import expr as _expr
from .expr import EvaluationError

__all__ = [
    "ScalarFunc",
    "ExprFunc",
    "TableFunc",
    "ProblemSpec",
    "CornerValues",
    "ValidatedProblem",
    "ProblemValidationError",
    "parse_scalar_func",
    "validate_problem",
    "corner_values",
    "problem_from_config",
    "load_config",
    "COEFFICIENT_NAMES",
]

A_DOMAIN = (0.0, 0.5)
BC_DOMAIN = (0.5, 1.0)
COEFFICIENT_NAMES = ("a1", "a2", "a3", "b1", "b2", "b3", "c1", "c2", "c3")


class ScalarFunc:
    """A real function of one variable on a closed interval."""

    domain: tuple[float, float]

    def _raw(self, t: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        with np.errstate(all="ignore"):
            out = np.asarray(self._raw(arr), dtype=float)
        out = np.broadcast_to(out, arr.shape).copy()
        if not np.all(np.isfinite(out)):
            bad = arr.reshape(-1)[~np.isfinite(out.reshape(-1))][0] if arr.ndim else arr
            raise EvaluationError(f"{self!s} is not finite at t={float(bad)!r}")
        return out if arr.ndim else float(out)

    def on(self, domain: tuple[float, float]) -> "ScalarFunc":
        return replace(self, domain=(float(domain[0]), float(domain[1])))

    def scaled(self, factor: Callable[[np.ndarray], np.ndarray]) -> "ScalarFunc":
        """Pointwise product with ``factor`` (a callable), sampled as a table."""
        return _ProductFunc(self, factor, self.domain)


@dataclass(frozen=True)
class ExprFunc(ScalarFunc):
    node: _expr.Node
    domain: tuple[float, float] = (0.0, 1.0)

    def _raw(self, t):
        return self.node.eval(t)

    def __str__(self) -> str:
        return _expr.to_source(self.node)


@dataclass(frozen=True)
class TableFunc(ScalarFunc):
    """Uniform table on ``domain``, linearly interpolated between samples."""

    samples: tuple[float, ...]
    domain: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if len(self.samples) < 2:
            raise ValueError("a table needs at least two samples")

    def _raw(self, t):
        lo, hi = self.domain
        nodes = np.linspace(lo, hi, len(self.samples))
        return np.interp(t, nodes, np.asarray(self.samples, dtype=float))

    def __str__(self) -> str:
        return f"table[{len(self.samples)}]"


@dataclass(frozen=True)
class _ProductFunc(ScalarFunc):
    base: ScalarFunc
    factor: Callable
    domain: tuple[float, float] = (0.0, 1.0)

    def _raw(self, t):
        return self.base(t) * np.asarray(self.factor(t), dtype=float)

    def __str__(self) -> str:
        return f"({self.base})*lambda"


def parse_scalar_func(src: str, domain: tuple[float, float] = (0.0, 1.0)) -> ExprFunc:
    """Parse ``src`` into an evaluable function of ``t`` on ``domain``."""
    if not isinstance(src, str) or not src.strip():
        raise _expr.ExprSyntaxError("empty expression", 0, src if isinstance(src, str) else "")
    return ExprFunc(_expr.parse(src), (float(domain[0]), float(domain[1])))


@dataclass(frozen=True)
class ProblemSpec:
    """One instance of the nonlocal problem.

    ``M`` is the number of master-grid steps on ``[0, 1]`` (even), ``K`` the
    image-series truncation, ``eps0`` the lower bound demanded of
    ``|a2|, |b1|, |b2|, |c1|``.
    """

    a1: ScalarFunc
    a2: ScalarFunc
    a3: ScalarFunc
    b1: ScalarFunc
    b2: ScalarFunc
    b3: ScalarFunc
    c1: ScalarFunc
    c2: ScalarFunc
    c3: ScalarFunc
    M: int = 64
    K: int = 8
    eps0: float = 1e-8
    s_min: float = 1e-14
    solver_tol: float = 1e-10

    @classmethod
    def from_strings(cls, a, b, c, **params) -> "ProblemSpec":
        """Build from three 3-tuples of expression strings."""
        funcs = {}
        for prefix, triple, dom in (("a", a, A_DOMAIN), ("b", b, BC_DOMAIN), ("c", c, BC_DOMAIN)):
            for i, src in enumerate(triple, start=1):
                funcs[f"{prefix}{i}"] = parse_scalar_func(str(src), dom)
        return cls(**funcs, **params)

    def with_params(self, **changes) -> "ProblemSpec":
        return replace(self, **changes)

    def coefficients(self) -> dict[str, ScalarFunc]:
        return {name: getattr(self, name) for name in COEFFICIENT_NAMES}

    def to_config(self) -> dict:
        cfg = {name: str(f) for name, f in self.coefficients().items()}
        cfg.update(M=self.M, K=self.K, eps0=self.eps0)
        return cfg


@dataclass(frozen=True)
class CornerValues:
    tau1_at_0: float
    tau1_at_1: float

    def __iter__(self):
        return iter((self.tau1_at_0, self.tau1_at_1))


@dataclass(frozen=True)
class ValidatedProblem:
    spec: ProblemSpec
    corners: CornerValues

    def __getattr__(self, name):
        # delegate coefficient and parameter access to the wrapped spec
        if name in ("spec", "corners"):
            raise AttributeError(name)
        return getattr(self.spec, name)


@dataclass
class ProblemValidationError(ValueError):
    """Raised with the full list of violated conditions."""

    issues: list[str] = field(default_factory=list)
    fatal: bool = False

    def __str__(self) -> str:
        return "; ".join(self.issues)


def _first_violation(t: np.ndarray, mask: np.ndarray) -> float | None:
    idx = np.flatnonzero(mask)
    return None if idx.size == 0 else float(t[idx[0]])


def _fmt(t: float) -> str:
    return f"{t:.6g}"


def validate_problem(spec: ProblemSpec) -> ValidatedProblem:
    """Check the coefficient conditions on a probe grid of ``10*M`` points.

    Raises :class:`ProblemValidationError` listing each violated condition
    together with the first offending ``t``.
    """
    issues: list[str] = []
    fatal = False
    if not isinstance(spec.M, (int, np.integer)) or spec.M < 4 or spec.M % 2:
        issues.append(f"M must be an even integer >= 4, got {spec.M!r}")
        raise ProblemValidationError(issues, fatal=True)
    if not isinstance(spec.K, (int, np.integer)) or spec.K < 1:
        issues.append(f"K must be a positive integer, got {spec.K!r}")
        raise ProblemValidationError(issues, fatal=True)
    if not spec.eps0 > 0 or not spec.s_min > 0 or not spec.solver_tol > 0:
        raise ProblemValidationError(["tolerances must be positive"], fatal=True)

    n_probe = 10 * spec.M + 1
    ta = np.linspace(*A_DOMAIN, n_probe)
    tb = np.linspace(*BC_DOMAIN, n_probe)
    values = {}
    for name, f in spec.coefficients().items():
        t = ta if name[0] == "a" else tb
        try:
            values[name] = f(t)
        except EvaluationError as exc:
            issues.append(f"{name}: {exc}")
            fatal = True
    if fatal:
        raise ProblemValidationError(issues, fatal=True)

    a1, a2, a3 = values["a1"], values["a2"], values["a3"]
    b1, b2, b3 = values["b1"], values["b2"], values["b3"]
    c1, c2 = values["c1"], values["c2"]

    den_a = a1[0] + a2[0]
    den_b = b1[-1] + b2[-1]
    if den_a == 0:
        issues.append("a1(0)+a2(0)!=0 violated at t=0")
        fatal = True
    if den_b == 0:
        issues.append("b1(1)+b2(1)!=0 violated at t=1")
        fatal = True

    for label, t, arr in (
        ("a1^2+a2^2>0", ta, a1**2 + a2**2),
        ("b1^2+b2^2>0", tb, b1**2 + b2**2),
        ("c1^2+c2^2>0", tb, c1**2 + c2**2),
    ):
        bad = _first_violation(t, ~(arr > 0))
        if bad is not None:
            issues.append(f"{label} violated at t={_fmt(bad)}")

    for name, t in (("a2", ta), ("b1", tb), ("b2", tb), ("c1", tb)):
        bad = _first_violation(t, np.abs(values[name]) < spec.eps0)
        if bad is not None:
            issues.append(f"|{name}|>=eps0={spec.eps0:g} violated at t={_fmt(bad)}")

    if issues:
        raise ProblemValidationError(issues, fatal=fatal)
    corners = CornerValues(float(a3[0] / den_a), float(b3[-1] / den_b))
    return ValidatedProblem(spec, corners)


def corner_values(problem: ValidatedProblem) -> CornerValues:
    """Values of the trace on y=0 at the corners, forced by the first two conditions."""
    return problem.corners


def problem_from_config(cfg: dict, **overrides) -> ProblemSpec:
    """Build a :class:`ProblemSpec` from a config mapping.

    Keys ``a1``..``c3`` are expression strings; ``M``, ``K``, ``eps0`` are
    optional. ``overrides`` replace config entries when not ``None``.
    """
    cfg = dict(cfg)
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    missing = [name for name in COEFFICIENT_NAMES if name not in cfg]
    if missing:
        raise KeyError(f"config is missing coefficients: {', '.join(missing)}")
    unknown = set(cfg) - set(COEFFICIENT_NAMES) - {"M", "K", "eps0"}
    if unknown:
        raise KeyError(f"unknown config keys: {', '.join(sorted(unknown))}")
    params = {}
    if "M" in cfg:
        params["M"] = int(cfg["M"])
    if "K" in cfg:
        params["K"] = int(cfg["K"])
    if "eps0" in cfg:
        params["eps0"] = float(cfg["eps0"])
    a = [cfg[f"a{i}"] for i in (1, 2, 3)]
    b = [cfg[f"b{i}"] for i in (1, 2, 3)]
    c = [cfg[f"c{i}"] for i in (1, 2, 3)]
    return ProblemSpec.from_strings(a, b, c, **params)


def load_config(path: str | os.PathLike, **overrides) -> ProblemSpec:
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError("config must be a JSON object")
    return problem_from_config(cfg, **overrides)
