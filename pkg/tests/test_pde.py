import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rairy.finiten import SourceEnsemble
from rairy.fredholm import tracy_widom_q0, tracy_widom_q0_prime
from rairy.pde import (StencilError, Surface, _P, _det_terms, _quartic_terms,
                       finite_n_jet, finite_n_pde_residual, fd_weights, involution_pair,
                       pde_terms, polynomial_partials, q_surface, r_airy_pde_residual,
                       structure_check, virasoro_blocks)
from rairy.specfun import UnsupportedDomainError


@settings(max_examples=40)
@given(st.integers(0, 4), st.lists(st.floats(-3, 3), min_size=8, max_size=8), st.floats(0.05, 0.5))
def test_fd_weights_exact_on_polynomials(k, c, h):
    # one Richardson step makes the stencil exact through degree k + 3
    deg = min(k + 3, 7)
    p = np.polynomial.Polynomial(c[: deg + 1])
    x0 = 0.3
    vals = p(x0 + h * np.arange(-4, 5))
    approx = fd_weights(k) @ vals / h**k
    exact = p.deriv(k)(x0) if k else p(x0)
    assert abs(approx - exact) <= 1e-8 * (1 + np.abs(c).sum()) / h**k


def test_fd_weights_plain_second_order():
    w = fd_weights(2, richardson=False)
    assert np.array_equal(w[3:6], [1.0, -2.0, 1.0])
    assert w.sum() == 0


@pytest.fixture(scope="module")
def r1_surface():
    return q_surface(1, (-3.4, -2.6), (-0.4, 0.4), (0.1, 0.1))


def test_r0_surface_tau_independent():
    s = q_surface(0, (-4.0, -2.0), (-1.0, 1.0), (0.5, 0.5))
    assert np.all(s.Q == s.Q[0])
    assert np.max(np.abs(s.Q[0] - tracy_widom_q0(s.x))) < 1e-10


def test_surface_accuracy(r1_surface):
    assert np.max(r1_surface.accuracy) < 1e-10
    assert r1_surface.h_tau == pytest.approx(0.1)
    assert r1_surface.Q.shape == (9, 9)


def test_surface_large_tau_column():
    s = q_surface(1, (-10.0, -10.0), (-1.0, 1.0), (1.0, 1.0))
    x = s.x
    approx = tracy_widom_q0(x) + tracy_widom_q0_prime(x) / -10.0
    assert np.max(np.abs(s.Q[0] - approx)) < 1e-2
    # the first-order correction brings Q closer to the expansion than Q_0 alone
    assert np.max(np.abs(s.Q[0] - approx)) < np.max(np.abs(s.Q[0] - tracy_widom_q0(x)))


def test_surface_initial_condition_rate():
    taus = (-12.0, -6.0)
    s = [q_surface(1, (t, t), (-2.0, 2.0), (1.0, 1.0)) for t in taus]
    d = [np.max(np.abs(si.Q[0] - tracy_widom_q0(si.x))) for si in s]
    assert d[0] < d[1]
    assert d[0] * 12 <= 1.5 * d[1] * 6


def test_surface_domain():
    with pytest.raises(UnsupportedDomainError):
        q_surface(1, (-13.0, -1.0), (0.0, 1.0), (1.0, 1.0))
    with pytest.raises(UnsupportedDomainError):
        q_surface(1, (-3.0, -1.0), (0.0, 7.0), (1.0, 1.0))


def test_tau_independent_surface_residual_zero():
    taus = np.linspace(-4, -2, 21)
    xs = np.linspace(-1, 1, 21)
    Q = np.tile(tracy_widom_q0(xs), (len(taus), 1))
    s = Surface(r=1, tau=taus, x=xs, Q=Q, accuracy=np.zeros_like(Q))
    rep = r_airy_pde_residual(s, (taus[10], xs[10]))
    assert abs(rep.residual) < 1e-10


def test_r1_residual(r1_surface):
    rep = r_airy_pde_residual(r1_surface, (-3.0, 0.0))
    assert rep.normalization > 0
    assert rep.relative <= 5e-3


def test_structure_form_converges(r1_surface):
    # the first form divides by Q_txx^2 and is more sensitive to the stencil;
    # its mismatch with the expanded form must vanish at fourth order
    coarse = structure_check(r1_surface, (-3.0, 0.0))[2]
    fine_surface = q_surface(1, (-3.2, -2.8), (-0.2, 0.2), (0.05, 0.05))
    fine = structure_check(fine_surface, (-3.0, 0.0))[2]
    assert fine < 2e-3
    assert 8 < coarse / fine < 32


def test_stencil_outside(r1_surface):
    with pytest.raises(StencilError):
        r_airy_pde_residual(r1_surface, (-3.0, 0.0), stride=2)
    with pytest.raises(StencilError):
        r_airy_pde_residual(r1_surface, (-3.05, 0.0))


def test_wrong_surface_fails():
    # a perturbed surface is not a solution: the residual is order one
    taus = np.linspace(-3.4, -2.6, 9)
    xs = np.linspace(-0.4, 0.4, 9)
    T, X = np.meshgrid(taus, xs, indexing="ij")
    Q = tracy_widom_q0(X) + 0.1 * np.sin(T) * np.cos(2 * X)
    s = Surface(r=1, tau=taus, x=xs, Q=Q, accuracy=np.zeros_like(Q))
    assert r_airy_pde_residual(s, (-3.0, 0.0)).relative > 1e-2


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=25, max_size=25), st.floats(-3, 3), st.floats(-3, 3),
       st.integers(-3, 3))
def test_involution(coeffs, tau, x, r):
    # every monomial of the operator has odd total order in tau, so the map
    # (tau, x, r, f) -> (-tau, x, -r, f(-tau, .)) flips its sign
    c = np.array(coeffs).reshape(5, 5)
    a, b = involution_pair(c, tau, x, r)
    scale = max(1.0, float(np.max(np.abs(pde_terms(polynomial_partials(c, tau, x), tau, x, r)))))
    assert abs(a + b) <= 1e-12 * scale


def test_polynomial_partials():
    c = np.zeros((4, 4))
    c[2, 3] = 1.0   # tau^2 x^3
    q = polynomial_partials(c, 2.0, 3.0)
    assert q[1, 2] == pytest.approx(2 * 2.0 * 6 * 3.0)
    assert q[2, 1] == pytest.approx(2 * 3 * 9.0)
    assert q[3, 0] == 0.0


@settings(max_examples=30)
@given(st.lists(st.floats(-2, 2), min_size=15, max_size=15),
       st.lists(st.floats(-2, 2), min_size=15, max_size=15))
def test_truncated_polynomial_product(a, b):
    def full(v):
        c = np.zeros((5, 5))
        k = 0
        for i in range(5):
            for j in range(5 - i):
                c[i, j] = v[k]
                k += 1
        return c
    A, B = full(a), full(b)
    prod = (_P(A) * _P(B)).c
    R = np.zeros((9, 9))
    for i in range(5):
        for j in range(5):
            R[i:i + 5, j:j + 5] += A[i, j] * B
    for i in range(5):
        for j in range(5 - i):
            assert prod[i, j] == pytest.approx(R[i, j], abs=1e-12)


def test_finite_n_quartic_n2():
    q, d, v = finite_n_pde_residual(SourceEnsemble(2, 1, 1.0), 2.0)
    assert q.relative <= 1e-3
    assert d.relative <= 1e-3


def test_finite_n_determinant_n4():
    q, d, v = finite_n_pde_residual(SourceEnsemble(4, 1, 2.0), 4.0)
    assert d.relative <= 5e-3
    # both forms encode the same vanishing
    assert abs(math.log10(max(q.relative, 1e-16)) - math.log10(max(d.relative, 1e-16))) < 2.5


def test_finite_n_refinement():
    ens = SourceEnsemble(3, 1, 1.5)
    coarse = finite_n_pde_residual(ens, 3.0, h=0.1)[0].relative
    fine = finite_n_pde_residual(ens, 3.0, h=0.05)[0].relative
    assert fine <= 2 * coarse


def test_perturbed_jet_fails():
    ens = SourceEnsemble(2, 1, 1.0)
    c = finite_n_jet(ens, 2.0)
    c[1, 2] += 0.05
    v = virasoro_blocks(c, ens, 2.0)
    t = _quartic_terms(v)
    assert abs(t.sum()) / np.max(np.abs(t)) > 1e-2


def test_determinant_expansion_matches_numpy():
    rng = np.random.default_rng(4)
    M = rng.normal(size=(4, 4))
    assert abs(_det_terms(M).sum() - np.linalg.det(M)) < 1e-12


def test_finite_n_guards():
    with pytest.raises(UnsupportedDomainError):
        finite_n_pde_residual(SourceEnsemble(7, 1, 2.0), 4.0)
    with pytest.raises(StencilError):
        finite_n_pde_residual(SourceEnsemble(2, 1, 0.1), 2.0)
    with pytest.raises(UnsupportedDomainError):
        finite_n_pde_residual(SourceEnsemble(2, 0, 0.0), 2.0)
