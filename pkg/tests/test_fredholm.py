import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rairy.fredholm import (DomainTooFarLeftError, build_rule, fredholm_context, fredholm_logdet,
                            resolvent_functionals, trace_expansion, trace_expansion_closed,
                            trace_matrices, tracy_widom_q0, tracy_widom_q0_prime)
from rairy.asymptotics import q0_derivatives
from rairy.kernels import KernelSpec
from rairy.specfun import UnsupportedDomainError, airy_eval

AIRY = KernelSpec.airy()


@pytest.fixture(scope="module")
def res0():
    return resolvent_functionals(0.0)


@pytest.fixture(scope="module")
def res05():
    return resolvent_functionals(0.5)


def test_rule_self_consistency():
    rule = build_rule(0.0, 1e-10)
    a = fredholm_logdet(AIRY, 0.0, rule)
    b = fredholm_logdet(AIRY, 0.0, build_rule.__wrapped__(0.0, 1e-10) if hasattr(build_rule, "__wrapped__") else None)
    assert abs(a - b) < 1e-10
    from rairy.fredholm import _gauss_rule
    doubled = _gauss_rule(rule.x, rule.L, 2 * rule.m)
    assert abs(fredholm_logdet(AIRY, 0.0, doubled) - a) < 1e-10


def test_rule_invariants():
    for x in (-6.0, 0.0, 4.0):
        rule = build_rule(x)
        assert rule.m >= 20
        assert np.all(rule.weights > 0)
        assert np.all((rule.nodes > x) & (rule.nodes < x + rule.L))
        assert abs(rule.weights.sum() - rule.L) < 1e-12


def test_rule_length_and_size():
    assert build_rule(4.0).L <= 10
    assert build_rule(-6.0, 1e-8).m > build_rule(0.0, 1e-8).m


def test_rule_floor():
    with pytest.raises(UnsupportedDomainError):
        build_rule(-10.5)


def test_zero_kernel():
    assert fredholm_logdet(KernelSpec("zero"), 0.0) == 0.0


@pytest.mark.parametrize("x", [-2.0, 0.0, 2.0])
def test_nystrom_matches_painleve(x):
    assert abs(fredholm_logdet(AIRY, x) - tracy_widom_q0(x)) < 1e-8


def test_r1_tau0_is_distribution():
    k = KernelSpec.rairy(1, 0.0)
    xs = np.arange(-6.0, 8.01, 1.0)
    F = np.exp([fredholm_logdet(k, x) for x in xs])
    assert F[0] < 1e-3
    assert F[-1] > 1 - 1e-6
    assert np.all(np.diff(F) >= 0)


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 3), st.floats(-4, 0), st.floats(-4, 4))
def test_cdf_monotone_in_x(r, tau, x):
    k = KernelSpec.rairy(r, tau)
    a = fredholm_logdet(k, x)
    b = fredholm_logdet(k, x + 0.25)
    assert a <= 0 and b <= 0
    assert b >= a - 1e-12


def test_airy_matrix_spectrum():
    ctx = fredholm_context(AIRY, -3.0)
    ev = np.linalg.eigvalsh(ctx.M)
    assert np.allclose(ctx.M, ctx.M.T)
    assert ev.min() > -1e-12 and ev.max() < 1


def test_resolvent_tw1(res0):
    assert abs(res0.R_xx - res0.AA) <= 1e-8
    assert res0.AA > 0
    assert res0.inverse_residual <= 1e-9


def test_resolvent_tw4(res05):
    f = res05
    assert abs(2 * f.ApA - f.AA**2 + f.rho_x**2) <= 1e-8


@pytest.mark.parametrize("x", [-2.0, 0.5, 2.0])
def test_resolvent_tw4_prime(x):
    f = resolvent_functionals(x)
    assert abs(2 * f.AApp - f.ApAp - x * f.AA) <= 1e-7


@pytest.mark.parametrize("x", [-1.0, 0.5])
def test_resolvent_integration_by_parts_identity(x):
    f = resolvent_functionals(x)
    rhs = -f.rho_x * f.sigma_x - f.AApp + f.ApA * f.AA
    assert abs(f.ApAp - rhs) <= 1e-7


def test_resolvent_bracket_is_log_derivative(res0):
    h = 1e-3
    d = (fredholm_logdet(AIRY, h) - fredholm_logdet(AIRY, -h)) / (2 * h)
    assert abs(d - res0.AA) < 1e-6


def test_trace_closed_forms(res0):
    for r in (1, 2):
        Q1, Q2, Q3 = trace_expansion(r, 0.0, res0.rule)
        c1, c2, c3 = trace_expansion_closed(r, res0)
        assert abs(Q1 - c1) < 1e-10
        assert abs(Q2 - c2) < 1e-9
        assert abs(Q3 - c3) < 1e-8


def test_trace_vs_painleve(res0):
    d = q0_derivatives(np.array([0.0]))
    for r in (1, 2):
        Q1, Q2, Q3 = trace_expansion(r, 0.0, res0.rule)
        assert abs(Q1 - r * d.d[1][0]) < 1e-6
        assert abs(Q2 - r**2 / 2 * d.d[2][0]) < 1e-6
        assert abs(Q3 - (r**3 / 6 * d.d[3][0])) < 1e-5


def test_trace_of_square(res0):
    L1 = trace_matrices(2, res0.rule)[0]
    assert abs(np.trace(L1 @ L1) - 4 * res0.AA**2) < 1e-8


def test_q0_vanishes_at_grid_end():
    assert abs(tracy_widom_q0(8.0)) < 1e-10
    assert abs(tracy_widom_q0(12.0)) < 1e-14


@pytest.mark.parametrize("x", [-4.0, 0.0, 3.0, 9.0])
def test_q0_derivative(x):
    h = 1e-3
    d = (tracy_widom_q0(x + h) - tracy_widom_q0(x - h)) / (2 * h)
    assert abs(d - tracy_widom_q0_prime(x)) < 1e-7


def test_q0_prime_tail_closed_form():
    A, Ap = airy_eval(9.0)
    assert abs(tracy_widom_q0_prime(9.0) - (Ap**2 - 9.0 * A**2)) < 1e-25


def test_q0_below_grid():
    with pytest.raises(UnsupportedDomainError):
        tracy_widom_q0(-11.0)


def test_far_left_diagnostic():
    with pytest.raises((DomainTooFarLeftError, UnsupportedDomainError)):
        fredholm_logdet(AIRY, -12.0)
