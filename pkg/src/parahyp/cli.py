"""Command-line front end.

Subcommands::

    parahyp solve   --config problem.json --out DIR [--M 64] [--K 8]
    parahyp verify  --out DIR
    parahyp mms     --case quadratic-twin --grids 32,64,128 --out DIR
    parahyp kernels --table N --x 0 --xi 1 --s 0.25

Exit codes: 0 success, 1 usage error, 2 invalid problem, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile

import numpy as np

from . import kernels
from .expr import ExprError
from .field import reconstruct_field
from .kernels import KernelConfig, KernelDomainError
from .problem import ProblemValidationError, load_config, problem_from_config, validate_problem
from .quadrature import GridFunction
from .traces import SingularSystemError, TraceSet, solve_problem
from .verify import (
    TRACE_NAMES,
    convergence_study,
    interface_continuity,
    mms_case,
    mms_catalog,
    residual_nonlocal,
)

__all__ = ["run", "main", "UsageError"]

logger = logging.getLogger("parahyp")

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --- output helpers -------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_text(obj) -> str:
    def clean(v):
        if isinstance(v, (np.floating, np.integer)):
            v = v.item()
        if isinstance(v, float) and not math.isfinite(v):
            return None
        return v

    return json.dumps({k: clean(v) for k, v in obj.items()}, indent=2, sort_keys=True) + "\n"


def _write_all(out_dir: str, files: dict[str, str]) -> None:
    """Write every file to a temp name first, then rename, so a failure leaves no partial set."""
    os.makedirs(out_dir, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out_dir)
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            staged.append((tmp, os.path.join(out_dir, name)))
    except BaseException:
        for tmp, _ in staged:
            with contextlib.suppress(OSError):
                os.unlink(tmp)
        raise
    for tmp, final in staged:
        os.replace(tmp, final)


def _traces_csv(traces: TraceSet) -> str:
    grids = traces.as_dict()
    cols = list(grids)
    rows = zip(traces.tau1.nodes, *(grids[c].values for c in cols))
    return _csv_text(["t"] + cols, rows)


def _chars_csv(chars) -> str:
    rows = zip(chars.phi1.nodes, chars.phi1.values, chars.phi2.nodes, chars.phi2.values, chars.phi3.values)
    return _csv_text(["s_lower", "phi1", "s_upper", "phi2", "phi3"], rows)


def _read_traces(path: str) -> TraceSet:
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader])
    cols = {name: data[:, i] for i, name in enumerate(header)}
    s = cols["t"]
    return TraceSet(**{k: GridFunction(s[0], s[-1], cols[k]) for k in TRACE_NAMES[:6]})


# --- subcommands ----------------------------------------------------------


def _residual_summary(sol, problem, fld) -> dict:
    rep = residual_nonlocal(sol.traces, problem.spec).merge(interface_continuity(fld))
    return rep.to_flat()


def cmd_solve(args) -> int:
    if not os.path.isfile(args.config):
        raise UsageError(f"config file not found: {args.config}")
    spec = load_config(args.config, M=args.M, K=args.K)
    problem = validate_problem(spec)
    sol = solve_problem(problem)
    fld = reconstruct_field(sol.traces, n=args.field_n, K=spec.K)
    report = dict(sol.diagnostics)
    report.update(_residual_summary(sol, problem, fld))
    report["omega0_method"] = fld.meta["omega0_method"]
    report["field_n"] = fld.meta["n"]
    files = {
        "traces.csv": _traces_csv(sol.traces),
        "characteristics.csv": _chars_csv(sol.chars),
        "field.csv": _csv_text(["x", "y", "subdomain_id", "u"], fld.rows()),
        "report.json": _json_text(report),
        "config.json": json.dumps(spec.to_config(), indent=2, sort_keys=True) + "\n",
    }
    _write_all(args.out, files)
    print(f"solved M={spec.M} K={spec.K} cond={sol.diagnostics['cond']:.3e}; wrote {args.out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    needed = ("config.json", "traces.csv", "report.json")
    missing = [n for n in needed if not os.path.isfile(os.path.join(args.out, n))]
    if missing:
        raise UsageError(f"{args.out} lacks {', '.join(missing)}")
    with open(os.path.join(args.out, "config.json"), encoding="utf-8") as fh:
        spec = problem_from_config(json.load(fh))
    problem = validate_problem(spec)
    traces = _read_traces(os.path.join(args.out, "traces.csv"))
    with open(os.path.join(args.out, "report.json"), encoding="utf-8") as fh:
        stored = json.load(fh)
    fld = reconstruct_field(traces, n=stored.get("field_n"))
    fresh = residual_nonlocal(traces, spec).merge(interface_continuity(fld)).to_flat()
    bad = []
    for key, val in sorted(fresh.items()):
        old = stored.get(key)
        ok = old is not None and abs(val - old) <= 1e-9 * max(1.0, abs(old))
        print(f"{key:24s} {_fmt(val):>26s} {'ok' if ok else 'MISMATCH'}")
        if not ok:
            bad.append(key)
    worst = max(v for k, v in fresh.items() if k.endswith("_max"))
    print(f"worst residual {worst:.3e}")
    if bad:
        print(f"stored report disagrees on: {', '.join(bad)}", file=sys.stderr)
        return EXIT_NUMERIC
    if worst > args.tol:
        print(f"residual {worst:.3e} exceeds tolerance {args.tol:g}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_mms(args) -> int:
    try:
        case = mms_case(args.case)
    except KeyError:
        names = ", ".join(c.name for c in mms_catalog())
        raise UsageError(f"unknown case {args.case!r}; choose from {names}") from None
    try:
        grids = [int(g) for g in args.grids.split(",") if g.strip()]
    except ValueError:
        raise UsageError(f"--grids must be comma-separated integers, got {args.grids!r}") from None
    if not grids:
        raise UsageError("--grids is empty")
    try:
        table = convergence_study(case, grids, K=args.K)
    except ValueError as exc:
        if isinstance(exc, ProblemValidationError):
            raise
        raise UsageError(str(exc)) from None
    rows = list(table.to_csv_rows())
    # wall time is not reproducible; keep it out of the file body
    keep = [i for i, h in enumerate(rows[0]) if h != "seconds"]
    body = _csv_text([rows[0][i] for i in keep], ([r[i] for i in keep] for r in rows[1:]))
    _write_all(args.out, {"convergence.csv": body})
    for row in table.rows:
        errs = max(v for k, v in row.items() if k.startswith("err_"))
        print(f"M={row['M']:5d}  max trace error {errs:.3e}  cond {row['cond']:.3e}")
    return EXIT_OK


_TABLES = {
    "N": kernels.eval_n,
    "G": kernels.eval_gbar,
    "Gx": kernels.eval_gbar_dx,
    "Gxi": kernels.eval_gbar_dxi,
}


def cmd_kernels(args) -> int:
    cfg = KernelConfig(args.K, 1e-14)
    fn = _TABLES[args.table]
    y = args.eta + args.s
    if args.x is not None and args.xi is not None:
        val = float(fn(args.x, y, args.xi, args.eta, cfg))
        print(_fmt(val) if args.digits is None else f"{val:.{args.digits}f}")
        return EXIT_OK
    if args.n < 2:
        raise UsageError("--n must be at least 2")
    # table over whichever of x, xi was not fixed
    xs = np.linspace(0.0, 1.0, args.n) if args.x is None else np.array([args.x])
    xis = np.linspace(0.0, 1.0, args.n) if args.xi is None else np.array([args.xi])
    X, XI = np.meshgrid(xs, xis, indexing="ij")
    vals = fn(X, y, XI, args.eta, cfg)
    rows = ((a, y, b, args.eta, v) for a, b, v in zip(X.ravel(), XI.ravel(), vals.ravel()))
    sys.stdout.write(_csv_text(["x", "y", "xi", "eta", "value"], rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="parahyp", description="Nonlocal parabolic-hyperbolic trace solver")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("solve", help="solve a problem given as JSON")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--M", type=int)
    s.add_argument("--K", type=int)
    s.add_argument("--field-n", type=int, default=None, help="square grid size (default M)")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="re-check a solve output directory")
    v.add_argument("--out", required=True)
    v.add_argument("--tol", type=float, default=1e-1)
    v.set_defaults(func=cmd_verify)

    m = sub.add_parser("mms", help="convergence study on a manufactured case")
    m.add_argument("--case", required=True)
    m.add_argument("--grids", default="32,64,128,256")
    m.add_argument("--K", type=int, default=8)
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_mms)

    k = sub.add_parser("kernels", help="evaluate a heat kernel")
    k.add_argument("--table", choices=sorted(_TABLES), required=True)
    k.add_argument("--x", type=float, help="omit (with --xi) to dump a CSV table")
    k.add_argument("--xi", type=float)
    k.add_argument("--n", type=int, default=11, help="table points per free coordinate")
    k.add_argument("--s", type=float, required=True, help="time separation y - eta")
    k.add_argument("--eta", type=float, default=0.0)
    k.add_argument("--K", type=int, default=8)
    k.add_argument("--digits", type=int, default=None, help="fixed decimals (default: 17 significant)")
    k.set_defaults(func=cmd_kernels)
    return p


def _thread_limit():
    raw = os.environ.get("SOLVER_THREADS")
    if not raw:
        return contextlib.nullcontext()
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"SOLVER_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise UsageError("SOLVER_THREADS must be positive")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        with _thread_limit():
            return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ProblemValidationError, ExprError, KeyError) as exc:
        if isinstance(exc, ArithmeticError):
            print(f"numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        print(f"invalid problem: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SingularSystemError, KernelDomainError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except json.JSONDecodeError as exc:
        print(f"invalid problem: config is not valid JSON ({exc})", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"invalid problem: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())
