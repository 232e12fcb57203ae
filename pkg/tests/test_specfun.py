import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from rairy.specfun import (ContourPath, OutlierAirySpec, PathTooCloseError, UnsupportedDomainError,
                           airy_eval, contour_quadrature, default_path, hastings_mcleod,
                           outlier_airy, outlier_airy_deriv)
from rairy.fredholm import default_painleve

AI0 = 0.355028053887817239


# --- Airy --------------------------------------------------------------------

def test_airy_at_zero_matches_series_constant():
    A, Ap = airy_eval(0.0)
    assert abs(A - AI0) < 1e-15
    assert abs(Ap + 0.258819403792806798) < 1e-15


def test_airy_against_scipy_on_core_range():
    x = np.linspace(-12, 12, 2001)
    A, Ap = airy_eval(x)
    a, ap, _, _ = special.airy(x)
    assert np.max(np.abs(A - a)) < 1e-12
    assert np.max(np.abs(Ap - ap)) < 1e-12


def test_airy_relative_accuracy_far_right():
    x = np.array([12.5, 15.0, 20.0, 30.0])
    A, Ap = airy_eval(x)
    a, ap, _, _ = special.airy(x)
    assert np.max(np.abs(A / a - 1)) < 1e-10
    assert np.max(np.abs(Ap / ap - 1)) < 1e-10


def test_airy_ode_at_one():
    h = 1e-4
    App = (airy_eval(1 + h)[1] - airy_eval(1 - h)[1]) / (2 * h)
    assert abs(App / airy_eval(1.0)[0] - 1) < 1e-8


def test_airy_leading_asymptotic_at_ten():
    lead = math.exp(-2 / 3 * 10**1.5) / (2 * math.sqrt(math.pi) * 10**0.25)
    assert abs(airy_eval(10.0)[0] / lead - 1) < 0.01


@settings(max_examples=60, deadline=None)
@given(st.floats(-12, 12))
def test_airy_ode_residual(x):
    h = 1e-3
    A = airy_eval(x)[0]
    d = lambda k: airy_eval(x + k * h)[1]
    App = (d(-2) - 8 * d(-1) + 8 * d(1) - d(2)) / (12 * h)
    assert abs(App - x * A) <= 1e-10 * (1 + abs(x * A))


def test_airy_positive_and_decreasing_right():
    x = np.linspace(0, 20, 500)
    A = airy_eval(x)[0]
    assert np.all(A > 0)
    assert np.all(np.diff(A[x >= 1]) < 0)


# --- Hastings-McLeod -----------------------------------------------------------

@pytest.fixture(scope="module")
def hm():
    return default_painleve()


def test_hm_residual(hm):
    assert hm.residual <= 1e-9
    x = np.linspace(-10, 8, 721)
    g = hm(x)
    gpp = hm.cheb.deriv(2)(x)
    assert np.max(np.abs(gpp - x * g - 2 * g**3)) <= 1e-9
    assert np.all(g > 0)


def test_hm_matches_airy_at_right(hm):
    A = airy_eval(8.0)[0]
    assert abs(hm(8.0) - A) / A <= 1e-6
    assert hm.grid[-1] == 8.0


def test_hm_dominant_balance_left(hm):
    assert abs(hm(-8.0) / 2.0 - 1) < 0.05


def test_hm_refinement():
    a = hastings_mcleod(-10, 8)
    b = hastings_mcleod(-10, 8, n_cheb=2 * len(a.cheb.coef))
    x = np.linspace(-10, 8, 401)
    assert np.max(np.abs(a(x) - b(x))) < 1e-8


def test_hm_rejects_short_domain():
    with pytest.raises(UnsupportedDomainError):
        hastings_mcleod(-10, 4)


# --- outlier functions ---------------------------------------------------------

@pytest.mark.parametrize("sign", ["plus", "minus"])
@pytest.mark.parametrize("tau", [0.0, -1.0, -3.0])
def test_r0_is_airy(sign, tau):
    assert abs(outlier_airy(1.0, OutlierAirySpec(0, tau, sign)) - airy_eval(1.0)[0]) < 1e-14


def test_plus_r1_closed_form():
    A, Ap = airy_eval(0.0)
    spec = OutlierAirySpec(1, -1.0, "plus")
    assert abs(outlier_airy(0.0, spec) - (A - Ap)) < 1e-14
    assert abs(contour_quadrature(0.0, spec).real - (A - Ap)) < 1e-10


def test_minus_r1_tau0_at_origin():
    # the contour passes below the pole at 0, which contributes a residue of 1
    # on top of -int_0^inf Ai = -1/3
    spec = OutlierAirySpec(1, 0.0, "minus")
    val = outlier_airy(0.0, spec)
    assert abs(val - 2.0 / 3.0) < 1e-12
    assert abs(contour_quadrature(0.0, spec).real - val) < 1e-10


def test_contour_r0():
    c = contour_quadrature(0.0, OutlierAirySpec(0, 0.0, "plus"))
    assert abs(c - AI0) < 1e-9


def test_contour_plus_r2():
    spec = OutlierAirySpec(2, -2.0, "plus")
    assert abs(contour_quadrature(0.5, spec).real - outlier_airy(0.5, spec)) < 1e-8


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3), st.floats(-5, 0), st.sampled_from(["plus", "minus"]), st.floats(-3, 3))
def test_contour_value_is_real(r, tau, sign, u):
    spec = OutlierAirySpec(r, tau, sign)
    try:
        c = contour_quadrature(u, spec)
    except PathTooCloseError:
        return
    assert abs(c.imag) <= 1e-9 * (1 + abs(c.real))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.floats(-5, 0), st.sampled_from(["plus", "minus"]), st.floats(-4, 4))
def test_two_routes_agree(r, tau, sign, u):
    spec = OutlierAirySpec(r, tau, sign)
    try:
        c = contour_quadrature(u, spec)
    except PathTooCloseError:
        return
    assert abs(c.real - outlier_airy(u, spec)) < 1e-8 * (1 + abs(c.real))


def test_path_too_close():
    path = ContourPath(vertices=(-5 + 1j, 5 + 1j))
    with pytest.raises(PathTooCloseError):
        contour_quadrature(0.0, OutlierAirySpec(1, -1.02, "plus"), path)


def test_default_path_keeps_pole_above():
    for tau in (0.0, -0.1, -1.0, -4.0):
        v = default_path(tau).vertices
        assert max(complex(z).imag for z in v[1:3]) < abs(tau) or tau == 0.0
        if tau == 0.0:
            assert complex(v[1]).imag < 0


@pytest.mark.parametrize("r", [-1, 1.5])
def test_bad_r(r):
    with pytest.raises(UnsupportedDomainError):
        OutlierAirySpec(r, -1.0)


def test_positive_tau_rejected():
    with pytest.raises(UnsupportedDomainError):
        OutlierAirySpec(1, 0.5)


@pytest.mark.parametrize("r", [1, 2, 3])
@pytest.mark.parametrize("tau", [0.0, -0.7, -2.0])
def test_minus_lowering_relation(r, tau):
    # (d/du - tau) A_r^- = A_{r-1}^-, derivative by central differences
    u = np.linspace(-5, 5, 41)
    h = 1e-4
    spec = OutlierAirySpec(r, tau, "minus")
    d = (outlier_airy(u + h, spec) - outlier_airy(u - h, spec)) / (2 * h)
    lhs = d - tau * outlier_airy(u, spec)
    rhs = outlier_airy(u, OutlierAirySpec(r - 1, tau, "minus"))
    assert np.max(np.abs(lhs - rhs)) < 1e-6


@pytest.mark.parametrize("sign", ["plus", "minus"])
def test_derivative_helper(sign):
    spec = OutlierAirySpec(2, -1.5, sign)
    u = np.linspace(-3, 3, 13)
    h = 1e-5
    fd = (outlier_airy(u + h, spec) - outlier_airy(u - h, spec)) / (2 * h)
    assert np.max(np.abs(outlier_airy_deriv(u, spec) - fd)) < 1e-7


@pytest.mark.parametrize("r", [1, 2, 3])
@pytest.mark.parametrize("tau", [-2.0, -4.0])
def test_minus_decays_monotonically(r, tau):
    u = np.linspace(2, 14, 121)
    a = np.abs(outlier_airy(u, OutlierAirySpec(r, tau, "minus")))
    assert np.all(np.diff(a) <= 0)
    assert a[-1] < 1e-6


def test_minus_tau0_does_not_decay():
    # with tau = 0 the residue at the origin leaves a polynomial in u
    assert abs(outlier_airy(12.0, OutlierAirySpec(1, 0.0, "minus")) - 1.0) < 1e-12


@pytest.mark.parametrize("r", [1, 2, 3])
def test_plus_decays(r):
    assert abs(outlier_airy(14.0, OutlierAirySpec(r, -3.0, "plus"))) < 1e-8
