"""Finite-difference residuals of the r-Airy PDE and of the finite-n PDE."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .finiten import SourceEnsemble, log_pn
from .fredholm import _gauss_rule, build_rule, fredholm_logdet
from .kernels import KernelSpec
from .specfun import UnsupportedDomainError

__all__ = [
    "Surface",
    "ResidualReport",
    "VirasoroBlocks",
    "StencilError",
    "q_surface",
    "surface_partials",
    "pde_terms",
    "r_airy_pde_residual",
    "structure_check",
    "polynomial_partials",
    "involution_pair",
    "finite_n_jet",
    "virasoro_blocks",
    "finite_n_pde_residual",
]


class StencilError(ValueError):
    pass


# ---------------------------------------------------------------------------
# stencils

_BASE = {
    0: {0: 1.0},
    1: {-1: -0.5, 1: 0.5},
    2: {-1: 1.0, 0: -2.0, 1: 1.0},
    3: {-2: -0.5, -1: 1.0, 1: -1.0, 2: 0.5},
    4: {-2: 1.0, -1: -4.0, 0: 6.0, 1: -4.0, 2: 1.0},
}


def fd_weights(k, richardson=True):
    """Weights on offsets -4..4 (unit step) for the k-th derivative.

    Second-order centred stencil at steps 1 and 2 combined by one Richardson
    step, giving fourth-order accuracy.
    """
    w = np.zeros(9)
    if not richardson:
        for o, c in _BASE[k].items():
            w[o + 4] += c
        return w
    for o, c in _BASE[k].items():
        w[o + 4] += 4.0 * c / 3.0
        w[2 * o + 4] -= c / 2**k / 3.0
    return w


def _mixed(grid, i0, j0, i, j, hi, hj, stride=1, richardson=True):
    wi, wj = fd_weights(i, richardson), fd_weights(j, richardson)
    offs = np.arange(-4, 5) * stride
    ni, nj = grid.shape
    if i0 + offs.min() < 0 or i0 + offs.max() >= ni or j0 + offs.min() < 0 or j0 + offs.max() >= nj:
        raise StencilError("stencil leaves the grid")
    block = grid[np.ix_(i0 + offs, j0 + offs)]
    return float(wi @ block @ wj) / ((hi * stride) ** i * (hj * stride) ** j)


# ---------------------------------------------------------------------------
# r-Airy surface

@dataclass(frozen=True, eq=False)
class Surface:
    r: int
    tau: np.ndarray
    x: np.ndarray
    Q: np.ndarray              # Q[i, j] = Q(tau_i, x_j)
    accuracy: np.ndarray

    @property
    def h_tau(self):
        return float(self.tau[1] - self.tau[0]) if len(self.tau) > 1 else 0.0

    @property
    def h_x(self):
        return float(self.x[1] - self.x[0]) if len(self.x) > 1 else 0.0

    def index(self, tau, x):
        i = int(round((tau - self.tau[0]) / self.h_tau))
        j = int(round((x - self.x[0]) / self.h_x))
        if not (0 <= i < len(self.tau) and 0 <= j < len(self.x)):
            raise StencilError("point outside the surface")
        if abs(self.tau[i] - tau) > 1e-9 or abs(self.x[j] - x) > 1e-9:
            raise StencilError("point is not a grid node")
        return i, j


def _grid(lo, hi, h):
    n = int(round((hi - lo) / h))
    if abs(lo + n * h - hi) > 1e-9 * max(1.0, abs(hi)):
        raise UnsupportedDomainError("range is not a whole number of steps")
    return lo + h * np.arange(n + 1)


def q_surface(r, tau_range, x_range, steps, rule_accuracy=1e-13, workers=4):
    """Q(tau, x) = log det(I - K^(r)_tau) on a uniform grid.

    Each x column shares one quadrature rule, so Q is a smooth function of
    tau along a column.  One node-doubled evaluation per column estimates
    the accuracy.
    """
    t0, t1 = tau_range
    x0, x1 = x_range
    if not (-12 <= t0 <= t1 <= 0):
        raise UnsupportedDomainError("tau_range must lie in [-12, 0]")
    if not (-6 <= x0 <= x1 <= 6):
        raise UnsupportedDomainError("x_range must lie in [-6, 6]")
    ht, hx = steps
    taus = _grid(t0, t1, ht)
    xs = _grid(x0, x1, hx)
    tmid = float(taus[len(taus) // 2])

    def column(x):
        k = KernelSpec.rairy(r, tmid) if r else KernelSpec.airy()
        rule = build_rule(x, rule_accuracy, k)
        col = np.array([fredholm_logdet(KernelSpec.rairy(r, t) if r else KernelSpec.airy(), x, rule)
                        for t in taus])
        fine = _gauss_rule(x, rule.L, 2 * rule.m)
        err = abs(fredholm_logdet(k, x, fine) - col[len(taus) // 2])
        return col, err

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            cols = list(ex.map(column, xs))
    else:
        cols = [column(x) for x in xs]
    Q = np.column_stack([c for c, _ in cols])
    acc = np.tile(np.array([e for _, e in cols]), (len(taus), 1))
    if not np.all(np.isfinite(Q)):
        raise UnsupportedDomainError("non-finite Q on the surface")
    return Surface(r=int(r), tau=taus, x=xs, Q=Q, accuracy=acc)


_NEEDED = [(0, 3), (0, 4), (1, 1), (1, 2), (1, 3), (2, 0), (2, 1), (2, 2), (3, 0), (3, 1)]


def surface_partials(surface: Surface, point, stride=1, richardson=True):
    """{(i, j): d^i/dtau^i d^j/dx^j Q} at a grid node."""
    i0, j0 = surface.index(*point)
    return {(i, j): _mixed(surface.Q, i0, j0, i, j, surface.h_tau, surface.h_x, stride, richardson)
            for (i, j) in _NEEDED}


def pde_terms(q, tau, x, r):
    """Monomials of the one-time PDE after expanding the outer Wronskian.

    q maps (tau-order, x-order) to the partial derivative.  The explicit x
    and the Q_x, Q_tau, Q_xx factors cancel in the expansion.
    """
    q03, q04, q11, q12, q13 = q[0, 3], q[0, 4], q[1, 1], q[1, 2], q[1, 3]
    q20, q21, q22, q30, q31 = q[2, 0], q[2, 1], q[2, 2], q[3, 0], q[3, 1]
    return np.array([
        q03 * q11**2 * q13,
        -2 * q03 * q11 * q13 * r,
        q03 * q13 * r**2,
        -q04 * q11**2 * q12,
        2 * q04 * q11 * q12 * r,
        -q04 * q12 * r**2,
        -2 * q11**2 * q13,
        2 * q11 * q12**2,
        q11 * q12 * q22 * tau,
        q11 * q12 * q31,
        -q11 * q13 * q21 * tau,
        -q11 * q13 * q30,
        2 * q11 * q13 * r,
        0.5 * q12**2 * q30,
        -q12**2 * r,
        -0.5 * q12 * q20 * q22,
        -0.5 * q12 * q21**2,
        -2 * q12 * q22 * r * tau,
        -q12 * q31 * r,
        0.5 * q13 * q20 * q21,
        2 * q13 * q21 * r * tau,
        q13 * q30 * r,
    ])


@dataclass(frozen=True)
class ResidualReport:
    residual: float
    normalization: float
    relative: float
    steps: tuple
    detail: dict = field(default_factory=dict, compare=False)


def _report(terms, steps, **detail):
    res = float(np.sum(terms))
    norm = float(np.max(np.abs(terms)))
    if norm <= 0:
        return ResidualReport(res, 0.0, 0.0 if res == 0 else math.inf, steps, detail)
    return ResidualReport(res, norm, abs(res) / norm, steps, detail)


def r_airy_pde_residual(surface: Surface, point, stride=1, richardson=True):
    tau, x = point
    q = surface_partials(surface, point, stride, richardson)
    terms = pde_terms(q, tau, x, surface.r)
    return _report(terms, (surface.h_tau * stride, surface.h_x * stride), partials=q)


def _bracket(q, tau, x, r):
    """Inner bracket B of the one-time PDE and its x-derivative."""
    q02, q03, q04, q10, q11, q12, q13 = (q[0, 2], q[0, 3], q[0, 4], q[1, 0], q[1, 1],
                                         q[1, 2], q[1, 3])
    q20, q21, q22, q30, q31 = q[2, 0], q[2, 1], q[2, 2], q[3, 0], q[3, 1]
    B = (2 * q02 * q12 * r + q03 * q11**2 - 2 * q03 * q11 * r + q03 * r**2 + 2 * q10 * q12
         - 2 * q11**2 - q11 * q21 * tau - q11 * q30 + 2 * q11 * r + q12 * q20 * tau
         - q12 * r * x + 0.5 * q20 * q21 + 2 * q21 * r * tau + q30 * r)
    Bx = (2 * q02 * q13 * r + 2 * q03 * q11 * q12 + q04 * q11**2 - 2 * q04 * q11 * r
          + q04 * r**2 + 2 * q10 * q13 - 2 * q11 * q12 - q11 * q22 * tau - q11 * q31
          - q12 * q30 + q12 * r + q13 * q20 * tau - q13 * r * x + 0.5 * q20 * q22
          + 0.5 * q21**2 + 2 * q22 * r * tau + q31 * r)
    return B, Bx


def structure_check(surface: Surface, point, stride=1):
    """Compare d/dx(-2B/Q_txx) with Q_ttt - 4 Q_tx Q_xxx.

    B is written in the first form of the equation (squared (r - Q_tx)
    factor); it agrees identically with the bracket of the expanded form.
    Returns (lhs, rhs, relative difference).
    """
    i0, j0 = surface.index(*point)
    keys = set(_NEEDED) | {(0, 2), (1, 0)}
    q = {k: _mixed(surface.Q, i0, j0, k[0], k[1], surface.h_tau, surface.h_x, stride)
         for k in keys}
    tau, x = point
    B, Bx = _bracket(q, tau, x, surface.r)
    lhs = -2 * (Bx * q[1, 2] - B * q[1, 3]) / q[1, 2] ** 2
    rhs = q[3, 0] - 4 * q[1, 1] * q[0, 3]
    return lhs, rhs, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)


def polynomial_partials(coeffs, tau, x):
    """Exact partials of f = sum c[i, j] tau^i x^j."""
    c = np.asarray(coeffs, dtype=float)
    out = {}
    for (i, j) in _NEEDED:
        d = c
        for _ in range(i):
            d = np.polynomial.polynomial.polyder(d, axis=0)
        for _ in range(j):
            d = np.polynomial.polynomial.polyder(d, axis=1)
        out[i, j] = float(np.polynomial.polynomial.polyval2d(tau, x, d)) if d.size else 0.0
    return out


def involution_pair(coeffs, tau, x, r):
    """PDE operator on f at (tau, x, r) and on f(-tau, x) at (-tau, x, -r)."""
    c = np.asarray(coeffs, dtype=float)
    flipped = c * ((-1.0) ** np.arange(c.shape[0]))[:, None]
    a = float(np.sum(pde_terms(polynomial_partials(c, tau, x), tau, x, r)))
    b = float(np.sum(pde_terms(polynomial_partials(flipped, -tau, x), -tau, x, -r)))
    return a, b


# ---------------------------------------------------------------------------
# finite-n PDE via Taylor jets in (alpha, b)
#
# f = log P_n is replaced by its degree-4 Taylor polynomial about the
# stencil centre.  Every block is then a polynomial in (da, db), and each
# value needed at the centre (through B_{-1} G and B_{-1}^2 F) depends only
# on Taylor coefficients of total degree <= 4, so the polynomial algebra
# below is exact and all the approximation sits in the jet itself.

_DEG = 4


class _P:
    """Bivariate polynomial in (da, db), coefficients c[i, j], truncated at total degree 4."""

    __slots__ = ("c",)

    def __init__(self, c):
        c = np.array(c, dtype=float)
        out = np.zeros((_DEG + 1, _DEG + 1))
        n0, n1 = min(c.shape[0], _DEG + 1), min(c.shape[1], _DEG + 1)
        out[:n0, :n1] = c[:n0, :n1]
        i, j = np.indices(out.shape)
        out[i + j > _DEG] = 0.0
        self.c = out

    @classmethod
    def const(cls, v):
        c = np.zeros((1, 1))
        c[0, 0] = v
        return cls(c)

    def __add__(self, o):
        o = o if isinstance(o, _P) else _P.const(o)
        return _P(self.c + o.c)

    __radd__ = __add__

    def __neg__(self):
        return _P(-self.c)

    def __sub__(self, o):
        return self + (-(o if isinstance(o, _P) else _P.const(o)))

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if not isinstance(o, _P):
            return _P(self.c * o)
        out = np.zeros((2 * _DEG + 1, 2 * _DEG + 1))
        for i, j in zip(*np.nonzero(self.c)):
            out[i:i + _DEG + 1, j:j + _DEG + 1] += self.c[i, j] * o.c
        return _P(out)

    __rmul__ = __mul__

    def da(self):
        return _P(np.polynomial.polynomial.polyder(self.c, axis=0))

    def db(self):
        return _P(np.polynomial.polynomial.polyder(self.c, axis=1))

    @property
    def value(self):
        return float(self.c[0, 0])


def finite_n_jet(ens: SourceEnsemble, b, h=0.05, richardson=True):
    """Taylor coefficients of f = log P_n(alpha, b) about (ens.alpha, b)."""
    if ens.n > 6:
        raise UnsupportedDomainError("finite-n PDE check supports n <= 6")
    if ens.alpha - 4 * h <= 0:
        raise StencilError("stencil crosses alpha = 0")
    offs = np.arange(-4, 5)
    grid = np.empty((9, 9))
    for p, da in enumerate(offs):
        e = SourceEnsemble(ens.n, ens.k1, ens.alpha + da * h)
        for q, dbb in enumerate(offs):
            grid[p, q] = log_pn(e, b + dbb * h)
    if not np.all(np.isfinite(grid)):
        raise StencilError("log P_n not finite on the stencil")
    c = np.zeros((_DEG + 1, _DEG + 1))
    for i in range(_DEG + 1):
        for j in range(_DEG + 1 - i):
            c[i, j] = _mixed(grid, 4, 4, i, j, h, h, 1, richardson) / (math.factorial(i) * math.factorial(j))
    return c


@dataclass(frozen=True)
class VirasoroBlocks:
    F_plus: float
    F_minus: float
    H1_plus: float
    H1_minus: float
    H2_plus: float
    H2_minus: float
    G_plus: float
    G_minus: float
    BF_plus: float
    BF_minus: float
    BBF_plus: float
    BBF_minus: float
    BG_plus: float
    BG_minus: float


def _blocks(coeffs, ens: SourceEnsemble, b):
    k1, k2 = ens.k1, ens.k2
    f = _P(coeffs)
    al = _P([[ens.alpha], [1.0]])
    bb = _P([[b, 1.0]])
    inv_a = _P([[(-1.0) ** k / ens.alpha ** (k + 1)] for k in range(_DEG + 1)])
    B = _P.db
    fa = f.da()
    Fp = B(fa) - k1
    Fm = -B(B(f) + fa) - k2
    H1p = 4 * fa + 4 * k1 * al + 4 * k1 * k2 * inv_a
    H1m = -2 * (bb * B(fa) - al * fa.da() + fa) - 4 * k1 * k2 * inv_a
    H2p = 2 * (bb * B(fa) - al * fa.da() - fa - 2 * al * B(fa))
    g = B(f) + fa
    H2m = -2 * (bb * B(g) - al * g.da() - g)

    def wr(p, q, d):
        return d(p) * q - p * d(q)

    Gp = 0.5 * (wr(H1p, Fp, _P.db) - wr(H2p, Fp, _P.da))
    Gm = 0.5 * (wr(H1m, Fm, _P.db) + wr(H2m, Fm, _P.da))
    return dict(Fp=Fp, Fm=Fm, H1p=H1p, H1m=H1m, H2p=H2p, H2m=H2m, Gp=Gp, Gm=Gm)


def virasoro_blocks(coeffs, ens: SourceEnsemble, b) -> VirasoroBlocks:
    P = _blocks(coeffs, ens, b)
    Fp, Fm, Gp, Gm = P["Fp"], P["Fm"], P["Gp"], P["Gm"]
    return VirasoroBlocks(
        F_plus=Fp.value, F_minus=Fm.value, H1_plus=P["H1p"].value, H1_minus=P["H1m"].value,
        H2_plus=P["H2p"].value, H2_minus=P["H2m"].value, G_plus=Gp.value, G_minus=Gm.value,
        BF_plus=Fp.db().value, BF_minus=Fm.db().value,
        BBF_plus=Fp.db().db().value, BBF_minus=Fm.db().db().value,
        BG_plus=Gp.db().value, BG_minus=Gm.db().value)


def _quartic_terms(v: VirasoroBlocks):
    Fp, Fm, Gp, Gm = v.F_plus, v.F_minus, v.G_plus, v.G_minus
    BFp, BFm, BBFp, BBFm, BGp, BGm = (v.BF_plus, v.BF_minus, v.BBF_plus, v.BBF_minus,
                                      v.BG_plus, v.BG_minus)
    return np.array([
        Fp * BGm * Fp * BFm, -Fp * BGm * Fm * BFp,
        Fm * BGp * Fp * BFm, -Fm * BGp * Fm * BFp,
        -Fp * Gm * Fp * BBFm, Fp * Gm * Fm * BBFp,
        -Fm * Gp * Fp * BBFm, Fm * Gp * Fm * BBFp,
    ])


def _det_matrix(v: VirasoroBlocks):
    return np.array([
        [v.G_plus, v.BF_plus, -v.F_plus, 0.0],
        [-v.G_minus, v.BF_minus, -v.F_minus, 0.0],
        [v.BG_plus, v.BBF_plus, 0.0, -v.F_plus],
        [-v.BG_minus, v.BBF_minus, 0.0, -v.F_minus],
    ])


def _perm_sign(p):
    s = 1
    p = list(p)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            s = -s
    return s


def _det_terms(M):
    return np.array([_perm_sign(p) * np.prod([M[i, p[i]] for i in range(4)])
                     for p in itertools.permutations(range(4))])


def finite_n_pde_residual(ens: SourceEnsemble, b, h=0.05, richardson=True):
    """Residuals of the quartic form and of the 4x4 determinant form.

    Returns (quartic report, determinant report, blocks).  Each residual is
    normalised by the largest of the products it is built from.
    """
    if not 1 <= ens.k1 <= ens.n - 1:
        raise UnsupportedDomainError("need 1 <= k1 <= n-1")
    c = finite_n_jet(ens, b, h, richardson)
    v = virasoro_blocks(c, ens, b)
    q = _report(_quartic_terms(v), (h, h))
    d = _report(_det_terms(_det_matrix(v)), (h, h))
    if q.normalization < 1e-14:
        raise StencilError("degenerate normalisation: all blocks vanish")
    return q, d, v
