"""Large negative tau expansion of Q(tau, x) = log P(sup A^(r)(tau) <= x).

Coefficients Q_1 .. Q_6 are built from derivatives of the Tracy-Widom
log-distribution Q_0, which are closed forms in (g, g', x) for the
Hastings-McLeod solution g (g'' = x g + 2 g^3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .fredholm import build_rule, default_painleve, fredholm_logdet, tracy_widom_q0, tracy_widom_q0_prime
from .kernels import KernelSpec
from .specfun import PainleveIISolution, UnsupportedDomainError

__all__ = [
    "Q0Derivatives",
    "ExpansionSet",
    "MomentExpansion",
    "AsymptoticTable",
    "q0_derivatives",
    "expansion_coefficients",
    "f5",
    "asymptotic_q",
    "shifted_q",
    "asymptotic_compare",
    "fit_coefficients",
    "estimate_c6",
    "edge_moments_direct",
    "edge_moments_expansion",
    "Q_TERMS",
]


@dataclass(frozen=True, eq=False)
class Q0Derivatives:
    x: np.ndarray
    d: np.ndarray          # d[k] = Q_0^(k)(x), k = 0..6
    sol: PainleveIISolution = field(repr=False)

    def __getitem__(self, k):
        return self.d[k]


def _closed_derivs(x, g, gp):
    g2 = g * g
    return [
        -g2,
        -2 * g * gp,
        -2 * (2 * g2 * g2 + g2 * x + gp**2),
        -2 * g * (12 * g2 * gp + g + 4 * gp * x),
        -4 * (12 * g2**3 + 10 * g2 * g2 * x + 18 * g2 * gp**2 + 2 * g2 * x**2 + 3 * g * gp
              + 2 * gp**2 * x),
    ]


def q0_derivatives(grid, sol: PainleveIISolution | None = None) -> Q0Derivatives:
    sol = sol or default_painleve()
    x = np.atleast_1d(np.asarray(grid, dtype=float))
    if np.any(x < sol.alpha_min):
        raise UnsupportedDomainError("grid extends left of the Painleve solution")
    g, gp = sol(x), sol.deriv(x)
    rows = [np.atleast_1d(tracy_widom_q0(x, sol)), np.atleast_1d(tracy_widom_q0_prime(x, sol))]
    rows += _closed_derivs(x, g, gp)
    return Q0Derivatives(x=x, d=np.array(rows), sol=sol)


# ---------------------------------------------------------------------------
# F_5

@lru_cache(maxsize=4)
def _g4_antiderivative(sol: PainleveIISolution):
    # global antiderivative of g^4, used only by the iterated check route
    g2 = sol.cheb * sol.cheb
    return (g2 * g2).integ(lbnd=sol.alpha_max)


def _panel_nodes(x, end, nq=24):
    """Gauss-Legendre nodes and weights on [x, end] in unit panels (per point)."""
    t, w = np.polynomial.legendre.leggauss(nq)
    k = max(1, int(math.ceil(end - x)))
    edges = np.linspace(x, end, k + 1)
    a, b = edges[:-1, None], edges[1:, None]
    return (a + 0.5 * (b - a) * (t + 1)).ravel(), (0.5 * (b - a) * w).ravel()


def _tail_integrals(x, sol):
    """int_x^inf Q_0, int_x^inf (u - x) Q_0''(u)^2 du and int_x^inf Q_0''^2.

    Integrated locally from each x so that far-right values keep their
    relative precision; beyond the collocation interval g^2 is below 1e-20.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    end = sol.alpha_max
    out = np.zeros((3, len(x)))
    for i, xi in enumerate(x):
        if xi >= end:
            continue
        s, w = _panel_nodes(xi, end)
        g2 = sol(s) ** 2
        out[0, i] = -0.5 * np.sum(w * (s - xi) ** 2 * g2)
        out[1, i] = np.sum(w * (s - xi) * g2 * g2)
        out[2, i] = np.sum(w * g2 * g2)
    return out[0], out[1], out[2]


def f5(q0: Q0Derivatives):
    """F_5 = x^2 Q0' + 4x Q0 + Q0'^2 + 10 int Q0 - 6 int_x^inf (u-x) Q0''^2."""
    x = q0.x
    intQ0, dbl, _ = _tail_integrals(x, q0.sol)
    return x**2 * q0[1] + 4 * x * q0[0] + q0[1] ** 2 + 10 * intQ0 - 6 * dbl


def iterated_q0pp_squared(x, sol=None, n=80):
    """int_x^inf dy int_y^inf Q0''(u)^2 du as a genuine double integral (check route)."""
    sol = sol or default_painleve()
    n0 = _g4_antiderivative(sol)
    inner = lambda y: -n0(np.minimum(y, sol.alpha_max))
    t, w = np.polynomial.legendre.leggauss(n)
    # split at 0 to follow the decay of g
    total = 0.0
    edges = [x, max(x, 0.0) if x < 0 else x, sol.alpha_max]
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        y = a + 0.5 * (b - a) * (t + 1)
        total += 0.5 * (b - a) * np.sum(w * inner(y))
    return float(total)


# ---------------------------------------------------------------------------
# coefficients

# Q_n as {power of r: (description)}; used by the parity property test
Q_TERMS = {
    1: (1,),
    2: (2,),
    3: (3, 1),
    4: (4, 2),
    5: (5, 3, 1),
    6: (6, 4, 2),
}


@dataclass(frozen=True, eq=False)
class ExpansionSet:
    r: int
    x: np.ndarray
    Q: tuple               # Q[0] = Q_0, ..., Q[6]
    F5: np.ndarray
    c6: float = 0.0
    q0: Q0Derivatives = field(default=None, repr=False)


def _coefficient_parts(q0: Q0Derivatives, F5, c6=0.0):
    """Q_n split by powers of r with the r-power factored out: {n: {p: array}}."""
    x, d = q0.x, q0.d
    # F_5' piece by piece: (x^2 Q0')' + (4x Q0)' + (Q0'^2)' - 10 Q0 + 6 int_x^inf Q0''^2
    n0 = _tail_integrals(x, q0.sol)[2]
    F5p = x**2 * d[2] + 2 * x * d[1] + 4 * d[0] + 4 * x * d[1] + 2 * d[1] * d[2] - 10 * d[0] + 6 * n0
    return {
        1: {1: d[1]},
        2: {2: d[2] / 2},
        3: {3: d[3] / 6, 1: x * d[1] / 3},
        4: {4: d[4] / 24, 2: x * d[2] / 3 + 7 * d[1] / 12},
        5: {5: d[5] / 120, 3: x * d[3] / 6 + 7 * d[2] / 12, 1: F5 / 5},
        6: {6: d[6] / 720, 4: x * d[4] / 18 + 7 * d[3] / 24,
            2: (F5p + (5.0 / 18.0) * (x**2 * d[2] + 13 * (x + c6) * d[1])) / 5},
    }


def expansion_coefficients(q0: Q0Derivatives, r, c6=0.0) -> ExpansionSet:
    if r < 0:
        raise UnsupportedDomainError("r must be >= 0")
    F5 = f5(q0)
    parts = _coefficient_parts(q0, F5, c6)
    Q = [q0[0]]
    for n in range(1, 7):
        Q.append(sum(r**p * v for p, v in parts[n].items()))
    return ExpansionSet(r=int(r), x=q0.x, Q=tuple(np.asarray(q) for q in Q), F5=F5, c6=c6, q0=q0)


def _scalar(a):
    a = np.asarray(a)
    return float(a) if a.ndim == 0 else (float(a[0]) if a.size == 1 else a)


def asymptotic_q(es: ExpansionSet, tau, order):
    """Partial sum Q_0 + Q_1/tau + ... + Q_order/tau^order on the set's grid."""
    if order > 5:
        raise UnsupportedDomainError("order > 5 involves the undetermined constant c6")
    if order < 0:
        raise UnsupportedDomainError("order must be >= 0")
    if tau > -2:
        raise UnsupportedDomainError("the expansion needs tau <= -2")
    return _scalar(sum(es.Q[i] / tau**i for i in range(order + 1)))


def shifted_q(es: ExpansionSet, tau):
    """Q_0((x + r/tau)(1 + r/(3 tau^3)) + r^2/(4 tau^4)) + r F_5/(5 tau^5)."""
    if tau > -2:
        raise UnsupportedDomainError("the expansion needs tau <= -2")
    r, x = es.r, es.x
    arg = (x + r / tau) * (1 + r / (3 * tau**3)) + r**2 / (4 * tau**4)
    return _scalar(tracy_widom_q0(arg, es.q0.sol) + r * es.F5 / (5 * tau**5))


# ---------------------------------------------------------------------------
# comparison with the Fredholm route

def exact_q(r, tau, x, accuracy=1e-13):
    k = KernelSpec.rairy(r, tau) if r else KernelSpec.airy()
    return fredholm_logdet(k, x, build_rule(x, accuracy, k))


@dataclass(frozen=True)
class AsymptoticTable:
    r: int
    x: float
    order: int
    taus: tuple
    exact: tuple
    approx: tuple
    errors: tuple
    exponent: float        # fitted p in |error| ~ C |tau|^(-p)


def asymptotic_compare(r, x_probe, tau_list, order):
    taus = tuple(float(t) for t in tau_list)
    if any(t < -16 - 1e-12 or t > -4 + 1e-12 for t in taus):
        raise UnsupportedDomainError("tau_list must lie in [-16, -4]")
    es = expansion_coefficients(q0_derivatives([x_probe]), r)
    ex = tuple(exact_q(r, t, x_probe) for t in taus)
    ap = tuple(asymptotic_q(es, t, order) for t in taus)
    err = tuple(e - a for e, a in zip(ex, ap))
    if r == 0 or all(abs(e) == 0 for e in err):
        p = math.nan
    else:
        p = -float(np.polyfit(np.log(np.abs(taus)), np.log(np.abs(err)), 1)[0])
    return AsymptoticTable(r=int(r), x=float(x_probe), order=order, taus=taus, exact=ex,
                           approx=ap, errors=err, exponent=p)


FIT_TAUS = (-10, -12, -16, -20, -24, -32, -40, -48, -64, -80)


def fit_coefficients(r, x, taus=FIT_TAUS, degree=7):
    """Least-squares fit of Q(tau, x) - Q_0(x) on powers 1/tau .. 1/tau^degree."""
    taus = np.asarray(taus, dtype=float)
    y = np.array([exact_q(r, t, x) for t in taus]) - tracy_widom_q0(x)
    V = np.column_stack([taus ** (-k) for k in range(1, degree + 1)])
    coef, *_ = np.linalg.lstsq(V, y, rcond=None)
    return coef


def estimate_c6(r, x, taus=(-8, -10, -12, -14, -16, -20, -24)):
    """Estimate of the free constant in Q_6 from exact values; reported only."""
    if r == 0:
        raise UnsupportedDomainError("c6 does not enter for r = 0")
    es = expansion_coefficients(q0_derivatives([x]), r)
    taus = np.asarray(taus, dtype=float)
    y = np.array([exact_q(r, t, x) - asymptotic_q(es, t, 5) for t in taus])
    # one free parameter for 1/tau^6 plus a 1/tau^7 nuisance term
    V = np.column_stack([taus**-6.0, taus**-7.0])
    q6 = np.linalg.lstsq(V, y, rcond=None)[0][0]
    known = float(es.Q[6][0])  # evaluated with c6 = 0
    return (q6 - known) / ((13 * r**2 / 18) * float(es.q0[1][0]))


# ---------------------------------------------------------------------------
# moments

@dataclass(frozen=True)
class MomentExpansion:
    r: int
    tau: float
    order: int
    mu1: float
    mu2: float
    mean: float
    var: float


def _cdf_log(r, tau, x):
    return exact_q(r, tau, x, 1e-12)


@lru_cache(maxsize=32)
def edge_moments_direct(r, tau, n=48):
    """(mu1, mu2, var) of sup A^(r)(tau) from the exact distribution.

    With F = e^Q:
      mu1 = int_0^inf (1 - F) dx - int_-inf^0 F dx
      mu2 = 2 int_0^inf x (1 - F) dx - 2 int_-inf^0 x F dx
    Tails are cut where F or 1 - F drops below 1e-12.
    """
    if tau > 0:
        raise UnsupportedDomainError("tau > 0 is outside the supported domain")
    lo = -1.0
    while lo > -9.5 and _cdf_log(r, tau, lo) > math.log(1e-12):
        lo -= 0.5
    hi = 1.0
    while hi < 12 and -math.expm1(_cdf_log(r, tau, hi)) > 1e-12:
        hi += 0.5
    t, w = np.polynomial.legendre.leggauss(n)
    m1 = m2 = 0.0
    for a, b, left in ((lo, 0.0, True), (0.0, hi, False)):
        # two panels per side
        for a2, b2 in ((a, 0.5 * (a + b)), (0.5 * (a + b), b)):
            xs = a2 + 0.5 * (b2 - a2) * (t + 1)
            ws = 0.5 * (b2 - a2) * w
            Q = np.array([_cdf_log(r, tau, xx) for xx in xs])
            if left:
                F = np.exp(Q)
                m1 -= np.sum(ws * F)
                m2 -= 2 * np.sum(ws * xs * F)
            else:
                S = -np.expm1(Q)
                m1 += np.sum(ws * S)
                m2 += 2 * np.sum(ws * xs * S)
    return float(m1), float(m2), float(m2 - m1 * m1)


def edge_moments_expansion(r, tau, base=None):
    """Mean and variance of sup A^(r)(tau) from the expansion through 1/tau^4."""
    if tau > -2:
        raise UnsupportedDomainError("the expansion needs tau <= -2")
    m1, m2, v0 = base if base is not None else edge_moments_direct(0, -2.0)
    mean = m1 * (1 - r / (3 * tau**3)) - r / tau - r**2 / (4 * tau**4)
    var = v0 * (1 - 2 * r / (3 * tau**3))
    return MomentExpansion(r=int(r), tau=float(tau), order=4, mu1=mean, mu2=var + mean**2,
                           mean=mean, var=var)
