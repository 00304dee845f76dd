import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parahyp import expr
from parahyp.expr import BinOp, Call, Const, Neg, Num, Var, parse, to_source

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)
leaves = st.one_of(finite.map(Num), st.just(Var()), st.sampled_from(["pi", "e"]).map(Const))


def _extend(children):
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda a: BinOp(*a)),
        st.tuples(st.sampled_from(sorted(expr.FUNCTIONS)), children).map(lambda a: Call(*a)),
    )


trees = st.recursive(leaves, _extend, max_leaves=12)
PROBES = np.linspace(-2.0, 2.0, 9)


def _values(node):
    with np.errstate(all="ignore"):
        return np.asarray(node.eval(PROBES), dtype=float) * np.ones_like(PROBES)


@given(trees)
@settings(max_examples=300, deadline=None)
def test_print_parse_round_trip(tree):
    again = parse(to_source(tree))
    np.testing.assert_array_equal(_values(again), _values(tree))


@given(trees)
@settings(max_examples=100, deadline=None)
def test_printing_is_a_fixed_point(tree):
    text = to_source(tree)
    assert to_source(parse(text)) == to_source(parse(to_source(parse(text))))


@given(st.text(alphabet="t0123456789.+-*/^() sincoexpqrt@,e", max_size=20))
@settings(max_examples=400, deadline=None)
def test_arbitrary_text_never_crashes(src):
    try:
        node = parse(src)
    except expr.ExprSyntaxError as exc:
        assert 0 <= exc.pos <= len(src)
        assert f"offset {exc.pos}" in str(exc)
    else:
        with np.errstate(all="ignore"):
            node.eval(PROBES)


@pytest.mark.parametrize(
    "src, t, want",
    [("2*t^2", 0.5, 0.5), ("sin(pi*t)", 1.0, 0.0), ("2*t^2-4*t+4", 1.0, 2.0)],
)
def test_documented_values(src, t, want):
    assert abs(parse(src).eval(t) - want) <= 1e-15


def test_power_is_right_associative_and_binds_tighter_than_minus():
    assert parse("2^3^2").eval(0.0) == 512.0
    assert parse("-2^2").eval(0.0) == -4.0
    assert parse("2^-2").eval(0.0) == 0.25


def test_unary_plus_is_rejected_at_its_offset():
    with pytest.raises(expr.ExprSyntaxError) as info:
        parse("2*+t")
    assert info.value.pos == 2
    assert str(info.value).endswith("at offset 2")


def test_unknown_identifier_is_a_distinct_error():
    with pytest.raises(expr.UnknownIdentifierError) as info:
        parse("t + tan(t)")
    assert info.value.pos == 4


def test_non_string_input_is_a_type_error():
    with pytest.raises(TypeError):
        parse(3.0)


def test_negative_literals_print_unambiguously():
    assert parse(to_source(BinOp("-", Num(1.0), Num(-2.0)))).eval(0.0) == 3.0
    assert parse(to_source(BinOp("^", Num(-2.0), Num(2.0)))).eval(0.0) == 4.0
    assert math.copysign(1.0, parse(to_source(Num(-0.0))).eval(0.0)) == -1.0
