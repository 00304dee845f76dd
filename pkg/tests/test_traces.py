import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parahyp.ode_bvp import solve_tau1
from parahyp.quadrature import GridFunction
from parahyp.traces import (
    Pipeline,
    SingularSystemError,
    UnknownLayout,
    assemble_F,
    assemble_global_system,
    rel_nu1,
    rel_nu2,
    rel_phi2,
    rel_tau2p,
    rel_tau3p,
    rel_nu3,
    solve_problem,
    solve_system,
    tau1_map,
)
from parahyp.verify import mms_case, volterra_residual

M = 32


def _exact(name, M=M):
    case = mms_case(name)
    return case, case.problem(M), case.exact_traces(M), case.exact_chars(M)


def _pq(case, M=M):
    y = np.linspace(0, 1, M + 1)
    h = 0.25  # every manufactured phi1 is linear, so this difference is exact
    phi1 = case.exact["phi1"]
    p = (phi1(y / 2 + h) - phi1(y / 2 - h)) / (2 * h)
    q = case.exact["phi3"]((y + 1) / 2)
    return p, q


@pytest.mark.parametrize("name, nu1", [("quadratic", 2.0), ("constant", 0.0), ("linear", 0.0)])
def test_rel_nu1(name, nu1):
    _, problem, tr, ch = _exact(name)
    got = rel_nu1(tr.tau1, ch.phi1, problem)
    assert np.max(np.abs(got.values - nu1)) <= 1e-10


@pytest.mark.parametrize("name", ["quadratic", "constant", "linear"])
def test_rel_phi2_and_anchor(name):
    case, problem, tr, ch = _exact(name)
    phi2 = rel_phi2(tr.tau1, ch.phi1, problem)
    assert phi2.max_abs_error(case.exact["phi2"]) <= 1e-12
    assert phi2.values[-1] == tr.tau1.values[-1]


def test_rel_phi2_quadratic_value():
    _, problem, tr, ch = _exact("quadratic")
    assert rel_phi2(tr.tau1, ch.phi1, problem)(0.75) == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize(
    "name, p, q, tau2p, nu2",
    [("quadratic", 2.0, 0.0, 2.0, 0.0), ("constant", 0.0, 0.0, 0.0, 0.0), ("linear", -1.0, 1.0, 0.0, 1.0)],
)
def test_rel_tau2p_nu2(name, p, q, tau2p, nu2):
    _, problem, _, _ = _exact(name)
    P = GridFunction.sample(lambda y: p + 0 * y, 0, 1, M)
    Q = GridFunction.sample(lambda y: q + 0 * y, 0, 1, M)
    t2 = rel_tau2p(P, Q, problem)
    assert np.allclose(t2.values, tau2p, atol=1e-14)
    assert np.allclose(rel_nu2(t2, P).values, nu2, atol=1e-14)


@pytest.mark.parametrize("name, q, tau3p, nu3", [("quadratic", 0.0, 2.0, 2.0), ("constant", 0.0, 0.0, 0.0),
                                                  ("linear", 1.0, 0.0, 1.0)])
def test_rel_tau3p_nu3(name, q, tau3p, nu3):
    _, _, _, ch = _exact(name)
    Q = GridFunction.sample(lambda y: q + 0 * y, 0, 1, M)
    assert np.allclose(rel_tau3p(ch.phi2, Q).values, tau3p, atol=1e-12)
    assert np.allclose(rel_nu3(ch.phi2, Q).values, nu3, atol=1e-12)


@pytest.mark.parametrize("name", ["constant", "constant-twin"])
def test_constant_consistency_identity(name):
    problem = mms_case(name).problem(64)
    F1, F2 = assemble_F(problem)
    z = np.zeros(2 * 65)
    assert np.max(np.abs(F1(z)[1:])) <= 2e-6
    assert np.max(np.abs(F2(z)[1:])) <= 2e-6


def test_exact_unknowns_satisfy_the_collocation_equations_in_the_limit():
    res = []
    for m in (16, 32, 64, 128):
        case = mms_case("quadratic")
        pl = Pipeline(case.problem(m))
        p, q = _pq(case, m)
        res.append(np.max(np.abs(pl.residual(p, q))))
    assert all(b < a for a, b in zip(res, res[1:]))
    assert res[-1] < 1e-3


def test_tau1_map_matches_solver():
    case, problem, _, ch = _exact("quadratic")
    p, q = _pq(case)
    z = np.concatenate([p, q])
    direct = solve_tau1(ch.phi1, problem).values
    assert np.max(np.abs(tau1_map(problem)(z) - direct)) <= 1e-12


def test_linearization_is_exact():
    problem = mms_case("quadratic-twin").problem(16)
    pl = Pipeline(problem)
    amap = pl.linearize(pl.residual)
    z = np.random.default_rng(1).normal(size=34)
    np.testing.assert_allclose(amap(z), pl.residual(z[:17], z[17:]), atol=1e-11)


def test_layout():
    lay = UnknownLayout(8)
    assert lay.size == 18
    assert lay.index("p", 3) == 3 and lay.index("q", 0) == 9
    assert lay.label(9) == ("q", 0)
    p, q = lay.split(np.arange(18))
    assert p.size == q.size == 9
    with pytest.raises(IndexError):
        lay.index("p", 9)


@pytest.mark.parametrize("name", ["constant", "linear", "quadratic"])
def test_symmetric_catalog_systems_are_singular(name):
    with pytest.raises(SingularSystemError, match="not uniquely solvable"):
        solve_problem(mms_case(name).problem(32))


def test_constant_twin_solution_is_zero():
    system = assemble_global_system(mms_case("constant-twin").problem(64))
    z = solve_system(system)
    assert np.max(np.abs(z)) <= 1e-8
    assert np.isfinite(system.cond) and system.cond < 1e3


def test_quadratic_twin_unknowns_converge():
    errs = []
    for m in (32, 64, 128):
        sol = solve_problem(mms_case("quadratic-twin").problem(m))
        errs.append(max(np.max(np.abs(sol.p - 2)), np.max(np.abs(sol.q))))
    assert errs[0] > errs[1] > errs[2]
    assert np.log2(errs[1] / errs[2]) >= 1


def test_linear_twin_recovers_u_equals_x():
    sol = solve_problem(mms_case("linear-twin").problem(64))
    tr = sol.traces
    for g, f in ((tr.tau1, lambda x: x), (tr.tau2, lambda y: 0 * y), (tr.tau3, lambda y: 1 + 0 * y),
                 (tr.nu2, lambda y: 1 + 0 * y), (tr.nu3, lambda y: 1 + 0 * y), (sol.chars.phi1, lambda t: -t)):
        assert g.max_abs_error(f) <= 1e-9


def test_corner_anchors_are_exact():
    sol = solve_problem(mms_case("quadratic-twin").problem(32))
    tr, ch = sol.traces, sol.chars
    assert ch.phi1.values[0] == tr.tau1.values[0]
    assert ch.phi2.values[-1] == tr.tau1.values[-1]
    assert tr.tau2.values[0] == tr.tau1.values[0]
    assert tr.tau3.values[0] == tr.tau1.values[-1]
    assert tr.corner_mismatch() == 0.0
    assert sol.diagnostics["system_residual_max"] < 1e-12


@given(st.floats(-3.0, 3.0).filter(lambda a: abs(a) > 1e-3))
@settings(max_examples=8, deadline=None)
def test_solution_is_homogeneous_in_the_data(alpha):
    case = mms_case("quadratic-twin")
    spec = case.spec(16)
    lam = lambda t: alpha + 0 * np.asarray(t)  # noqa: E731
    scaled = spec.with_params(a3=spec.a3.scaled(lam), b3=spec.b3.scaled(lam), c3=spec.c3.scaled(lam))
    from parahyp.problem import validate_problem

    base = solve_problem(validate_problem(spec))
    other = solve_problem(validate_problem(scaled))
    for k, g in base.traces.as_dict().items():
        np.testing.assert_allclose(other.traces.as_dict()[k].values, alpha * g.values, atol=1e-11)


@given(st.floats(0.1, 3.0), st.floats(-0.9, 2.0))
@settings(max_examples=8, deadline=None)
def test_c_triple_scaling_invariance(k0, k1):
    from parahyp.problem import validate_problem

    spec = mms_case("quadratic-twin").spec(16)
    lam = lambda t: k0 * (1 + k1 * np.asarray(t))  # noqa: E731
    scaled = spec.with_params(c1=spec.c1.scaled(lam), c2=spec.c2.scaled(lam), c3=spec.c3.scaled(lam))
    a = solve_problem(validate_problem(spec)).traces.as_dict()
    b = solve_problem(validate_problem(scaled)).traces.as_dict()
    for k in a:
        np.testing.assert_allclose(a[k].values, b[k].values, atol=10 * spec.solver_tol)


def test_a_posteriori_volterra_residual_decreases():
    r = []
    for m in (16, 32, 64):
        case = mms_case("quadratic-twin")
        problem = case.problem(m)
        r.append(volterra_residual(solve_problem(problem), problem, n_probe=4).worst())
    assert r[0] > r[1] > r[2]
