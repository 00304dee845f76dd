import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parahyp.expr import EvaluationError, ExprSyntaxError
from parahyp.problem import (
    ProblemSpec,
    ProblemValidationError,
    TableFunc,
    corner_values,
    load_config,
    parse_scalar_func,
    problem_from_config,
    validate_problem,
)

QUAD = (("1", "1", "2*t^2"), ("1", "1", "2*t^2-4*t+4"), ("1", "1", "2"))


def _spec(a=QUAD[0], b=QUAD[1], c=QUAD[2], **kw):
    return ProblemSpec.from_strings(a, b, c, **kw)


@pytest.mark.parametrize(
    "a, b, c, corners",
    [
        (QUAD[0], QUAD[1], QUAD[2], (0.0, 1.0)),
        (("1", "1", "2"), ("1", "1", "2"), ("1", "1", "0"), (1.0, 1.0)),
        (("1", "1", "0"), ("1", "1", "2"), ("1", "1", "2"), (0.0, 1.0)),
    ],
)
def test_corner_values_of_manufactured_cases(a, b, c, corners):
    problem = validate_problem(_spec(a, b, c))
    assert tuple(corner_values(problem)) == corners


def test_vanishing_pair_reports_first_offending_t():
    with pytest.raises(ProblemValidationError) as info:
        validate_problem(_spec(a=("0", "0", "1")))
    assert any("a1^2+a2^2>0 violated at t=0" in s for s in info.value.issues)
    assert info.value.fatal  # the corner sum vanishes as well


def test_strengthened_condition_rejects_zero_a2():
    with pytest.raises(ProblemValidationError) as info:
        validate_problem(_spec(a=("1", "0", "0")))
    assert any(s.startswith("|a2|>=eps0") for s in info.value.issues)


def test_all_violations_are_listed():
    with pytest.raises(ProblemValidationError) as info:
        validate_problem(_spec(b=("t-0.75", "1", "2"), c=("0", "1", "2")))
    text = str(info.value)
    assert "|b1|>=eps0" in text and "|c1|>=eps0" in text


def test_c_pair_sum_of_squares_checked():
    with pytest.raises(ProblemValidationError) as info:
        validate_problem(_spec(c=("0", "0", "0")))
    assert any(s.startswith("c1^2+c2^2>0") for s in info.value.issues)


@pytest.mark.parametrize("M", [0, 3, 2, 7])
def test_grid_size_must_be_even_and_at_least_four(M):
    with pytest.raises(ProblemValidationError):
        validate_problem(_spec(M=M))


def test_unevaluable_coefficient_is_fatal():
    with pytest.raises(ProblemValidationError) as info:
        validate_problem(_spec(a=("1", "1", "1/(t-0.25)")))
    assert info.value.fatal


def test_scalar_func_raises_typed_error_on_non_finite():
    f = parse_scalar_func("sqrt(t-1)")
    with pytest.raises(EvaluationError):
        f(0.5)


def test_empty_expression_is_a_syntax_error():
    with pytest.raises(ExprSyntaxError):
        parse_scalar_func("   ")


def test_table_func_interpolates():
    f = TableFunc((0.0, 1.0, 4.0), (0.0, 1.0))
    assert f(0.25) == 0.5
    assert f(0.75) == 2.5
    with pytest.raises(ValueError):
        TableFunc((1.0,))


@given(st.floats(0.0, 0.5))
@settings(max_examples=50, deadline=None)
def test_evaluation_is_deterministic(t):
    f = parse_scalar_func("exp(-t)*sin(3*t)+t^2", (0.0, 0.5))
    assert f(t) == f(t)


@given(st.floats(0.0, 2.0))
@settings(max_examples=30, deadline=None)
def test_scaling_a_triple_keeps_corners(k):
    lam = lambda t: 1.0 + k * np.asarray(t) ** 2  # noqa: E731
    spec = _spec()
    scaled = spec.with_params(a1=spec.a1.scaled(lam), a2=spec.a2.scaled(lam), a3=spec.a3.scaled(lam))
    assert tuple(validate_problem(scaled).corners) == pytest.approx(tuple(validate_problem(spec).corners))


def test_config_round_trip(tmp_path):
    spec = _spec(M=32, K=5)
    path = tmp_path / "p.json"
    path.write_text(json.dumps(spec.to_config()))
    again = load_config(path)
    assert again.M == 32 and again.K == 5
    t = np.linspace(0.5, 1.0, 7)
    np.testing.assert_array_equal(again.b3(t), spec.b3(t))


def test_config_overrides_and_unknown_keys():
    cfg = _spec().to_config()
    assert problem_from_config(cfg, M=16, K=None).M == 16
    with pytest.raises(KeyError):
        problem_from_config({**cfg, "bogus": 1})
    cfg.pop("c3")
    with pytest.raises(KeyError):
        problem_from_config(cfg)


def test_validated_problem_delegates_to_spec():
    problem = validate_problem(_spec(M=16))
    assert problem.M == 16
    assert problem.a3(0.5) == 0.5
