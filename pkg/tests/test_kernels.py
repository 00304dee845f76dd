import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parahyp.kernels import (
    KernelConfig,
    KernelDomainError,
    eval_gbar,
    eval_gbar_dx,
    eval_gbar_dxi,
    eval_n,
    gbar_dx_moment_weights,
    n_scaled,
    n_xi_integral,
    truncation_bound,
)

CFG = KernelConfig(K=8)
unit = st.floats(0.0, 1.0)
inner = st.floats(0.01, 0.99)
sep = st.floats(1e-3, 1.0)


def _direct(x, s, xi, sign, K=60):
    n = np.arange(-K, K + 1)
    d = np.exp(-((x - xi + 2 * n) ** 2) / (4 * s)).sum()
    m = np.exp(-((x + xi + 2 * n) ** 2) / (4 * s)).sum()
    return (d + sign * m) / (2 * np.sqrt(np.pi * s))


def test_documented_kernel_values():
    assert eval_gbar(0.5, 0.25, 0.5, 0.0, CFG) == pytest.approx(0.169610, abs=1e-6)
    assert eval_n(0.0, 0.25, 1.0, 0.0, CFG) == pytest.approx(0.830493, abs=1e-6)
    # the direct sum is 1.1697134; the ratio 2.0732630/1.7724539 gives the same
    assert eval_n(0.0, 0.25, 0.0, 0.0, CFG) == pytest.approx(1.169713, abs=1e-6)
    assert eval_gbar_dx(0.0, 0.25, 0.5, 0.0, CFG) == pytest.approx(0.53286, abs=1e-4)


@given(unit, sep, unit)
@settings(max_examples=100, deadline=None)
def test_series_match_independent_long_sums(x, s, xi):
    assert eval_gbar(x, s, xi, 0.0, CFG) == pytest.approx(_direct(x, s, xi, -1), abs=1e-12)
    assert eval_n(x, s, xi, 0.0, CFG) == pytest.approx(_direct(x, s, xi, +1), abs=1e-12)


@given(st.floats(1e-4, 1.0), unit, st.sampled_from([0.0, 1.0]), st.integers(5, 12))
@settings(max_examples=100, deadline=None)
def test_dirichlet_property(s, xi, x, K):
    assert abs(eval_gbar(x, s + 0.25, xi, 0.25, KernelConfig(K=K))) <= 1e-12


@given(unit, sep, unit)
@settings(max_examples=100, deadline=None)
def test_symmetry_and_positivity(x, s, xi):
    assert eval_gbar(x, s, xi, 0.0, CFG) == pytest.approx(eval_gbar(xi, s, x, 0.0, CFG), abs=1e-14)
    assert eval_n(x, s, xi, 0.0, CFG) == pytest.approx(eval_n(xi, s, x, 0.0, CFG), abs=1e-14)
    assert eval_n(x, s, xi, 0.0, CFG) > 0
    assert eval_gbar(x, s, xi, 0.0, CFG) >= -1e-12


@given(inner, st.floats(0.01, 1.0), inner)
@settings(max_examples=100, deadline=None)
def test_x_derivative_matches_central_difference(x, s, xi):
    h = 1e-4
    fd = (eval_gbar(x + h, s, xi, 0.0, CFG) - eval_gbar(x - h, s, xi, 0.0, CFG)) / (2 * h)
    assert eval_gbar_dx(x, s, xi, 0.0, CFG) == pytest.approx(fd, abs=1e-6 * max(1.0, abs(fd)))


def test_derivative_vanishes_at_the_centre():
    assert eval_gbar_dx(0.5, 0.3, 0.5, 0.1, CFG) == 0.0


@given(inner, st.floats(0.05, 1.0), inner)
@settings(max_examples=50, deadline=None)
def test_heat_equation_in_y(x, s, xi):
    h = 1e-4
    g = lambda xx, ss: eval_gbar(xx, ss, xi, 0.0, CFG)  # noqa: E731
    gy = (g(x, s + h) - g(x, s - h)) / (2 * h)
    gxx = (g(x + h, s) - 2 * g(x, s) + g(x - h, s)) / h**2
    assert gy == pytest.approx(gxx, abs=1e-4)


@given(inner, st.floats(0.001, 1.0), inner)
@settings(max_examples=50, deadline=None)
def test_xi_derivative_identities(x, s, xi):
    h = 1e-5
    # d/dxi N = -d/dx Gbar
    dn = (eval_n(x, s, xi + h, 0.0, CFG) - eval_n(x, s, xi - h, 0.0, CFG)) / (2 * h)
    assert dn == pytest.approx(-eval_gbar_dx(x, s, xi, 0.0, CFG), rel=1e-5, abs=1e-6)
    dg = (eval_gbar(x, s, xi + h, 0.0, CFG) - eval_gbar(x, s, xi - h, 0.0, CFG)) / (2 * h)
    assert dg == pytest.approx(eval_gbar_dxi(x, s, xi, 0.0, CFG), rel=1e-5, abs=1e-6)


def test_normalisation_at_small_separation():
    s = 0.01
    assert np.sqrt(np.pi * s) * eval_n(0.0, 0.5 + s, 0.0, 0.5, CFG) == pytest.approx(1.0, abs=1e-10)
    assert abs(eval_n(0.3, s, 0.7, 0.0, KernelConfig(1)) - eval_n(0.3, s, 0.7, 0.0, KernelConfig(10))) < 1e-10


@given(unit, unit)
@settings(max_examples=50, deadline=None)
def test_truncation_bound_controls_the_tail(x, xi):
    s = 0.25
    diff = abs(eval_gbar(x, s, xi, 0.0, KernelConfig(5)) - eval_gbar(x, s, xi, 0.0, KernelConfig(10)))
    assert diff < truncation_bound(5, s)
    assert abs(eval_n(x, 1.0, xi, 0.0, KernelConfig(1)) - _direct(x, 1.0, xi, 1)) <= truncation_bound(1, 1.0)


def test_truncation_bound_monotone():
    assert all(truncation_bound(k, 1.0) > truncation_bound(k + 1, 1.0) for k in range(1, 9))
    s = np.linspace(0.01, 1.0, 50)
    vals = [truncation_bound(3, v) for v in s]
    assert np.all(np.diff(vals) > 0)
    with pytest.raises(ValueError):
        truncation_bound(0, 1.0)


def test_refuses_coincident_times():
    with pytest.raises(KernelDomainError):
        eval_n(0.0, 0.5, 0.0, 0.5, CFG)
    with pytest.raises(KernelDomainError):
        eval_gbar(0.0, 0.5, 0.0, 0.5 - 1e-16, CFG)
    with pytest.raises(ValueError):
        KernelConfig(K=0)


def test_scaled_kernel_limit_and_continuity():
    assert n_scaled(0.0, 0.0, 0.0, CFG) == pytest.approx(2 / (2 * np.sqrt(np.pi)))
    assert n_scaled(0.4, 0.4, 0.0, CFG) == pytest.approx(1 / (2 * np.sqrt(np.pi)))
    assert n_scaled(0.4, 0.4, 1e-10, CFG) == pytest.approx(n_scaled(0.4, 0.4, 0.0, CFG), rel=1e-9)
    s = 0.3
    assert n_scaled(0.2, 0.9, s, CFG) == pytest.approx(np.sqrt(s) * eval_n(0.2, s, 0.9, 0.0, CFG))


@given(unit, st.floats(0.001, 1.0), unit, unit)
@settings(max_examples=50, deadline=None)
def test_closed_form_cell_integral(x, s, a, b):
    from scipy.integrate import quad

    ref = quad(lambda xi: eval_n(x, s, xi, 0.0, CFG), a, b, limit=200)[0]
    assert n_xi_integral(x, s, a, b, 0.0, CFG) == pytest.approx(ref, abs=1e-10)


@pytest.mark.parametrize("x0", [0.0, 1.0])
def test_moment_weights_give_the_constant_identity(x0):
    y = np.array([1e-4, 0.01, 0.3, 1.0])
    nodes = np.linspace(0, 1, 65)
    w = gbar_dx_moment_weights(x0, y, nodes, CFG)
    # tau = 1: the Gbar_x integral equals N(x0,y,0,0) - N(x0,y,1,0)
    lhs = w.sum(axis=1) - eval_n(x0, y, 0.0, 0.0, CFG) + eval_n(x0, y, 1.0, 0.0, CFG)
    assert np.max(np.abs(lhs)) <= 1e-12


def test_moment_weights_integrate_linear_data_exactly():
    from scipy.integrate import quad

    nodes = np.linspace(0, 1, 9)
    tau = lambda xi: 0.3 + 2 * xi  # noqa: E731
    for y in (0.05, 0.4):
        w = gbar_dx_moment_weights(0.0, y, nodes, CFG)[0]
        ref = quad(lambda xi: tau(xi) * eval_gbar_dx(0.0, y, xi, 0.0, CFG), 0, 1, limit=200)[0]
        assert w @ tau(nodes) == pytest.approx(ref, abs=1e-10)


def test_partition_of_unity():
    from scipy.integrate import quad

    for x, y in ((0.3, 0.2), (0.5, 0.8), (0.9, 0.05)):
        a = quad(lambda xi: eval_gbar(x, y, xi, 0.0, CFG), 0, 1, limit=200)[0]
        side = lambda eta: eval_gbar_dxi(x, y, 0.0, eta, CFG) - eval_gbar_dxi(x, y, 1.0, eta, CFG)  # noqa: E731
        b = quad(side, 0, y - 1e-12, limit=400, points=[y - y * 2.0**-k for k in range(1, 30)])[0]
        assert a + b == pytest.approx(1.0, abs=1e-6)
