"""Nystrom discretisation of Fredholm determinants on (x, infinity).

Also: resolvent brackets of the Airy kernel, the trace expansion of
log det(I - K^(r)) in powers of 1/tau, and the Painleve route to the
Tracy-Widom log-distribution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as C

from .kernels import KernelSpec, airy_kernel, expansion_term
from .specfun import PainleveIISolution, UnsupportedDomainError, airy_eval, hastings_mcleod

__all__ = [
    "QuadratureRule",
    "FredholmContext",
    "ResolventFunctionals",
    "DomainTooFarLeftError",
    "build_rule",
    "fredholm_context",
    "fredholm_logdet",
    "resolvent_functionals",
    "trace_expansion",
    "trace_expansion_closed",
    "tracy_widom_q0",
    "tracy_widom_q0_prime",
    "trace_matrices",
    "default_painleve",
]

X_FLOOR = -10.0


class DomainTooFarLeftError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    x: float
    L: float
    m: int
    nodes: np.ndarray
    weights: np.ndarray
    accuracy: float = float("nan")


def _gauss_rule(x, L, m, accuracy=float("nan")):
    t, w = np.polynomial.legendre.leggauss(m)
    return QuadratureRule(x=float(x), L=float(L), m=int(m),
                          nodes=x + 0.5 * L * (t + 1), weights=0.5 * L * w,
                          accuracy=float(accuracy))


@lru_cache(maxsize=1)
def _airy_cutoff(level=1e-18):
    # first s with K_Ai(s, s) = Ai'(s)^2 - s Ai(s)^2 below level
    s = 2.0
    while True:
        A, Ap = airy_eval(s)
        if Ap**2 - s * A**2 < level:
            return s
        s += 0.25


def _logdet_matrix(M):
    sign, ld = np.linalg.slogdet(np.eye(len(M)) - M)
    return sign, ld


def build_rule(x, target_accuracy=1e-12, kernel: KernelSpec | None = None, m_max=400):
    """Gauss-Legendre rule on [x, x+L] resolving log det(I-K) to target_accuracy.

    The tolerance is relative once |log det| exceeds one.  Far left the
    determinant is dominated by rounding; the search then stops at the noise
    floor and the rule records the accuracy actually reached.
    """
    if x < X_FLOOR:
        raise UnsupportedDomainError(f"x = {x} is left of the supported floor {X_FLOOR}")
    kernel = kernel or KernelSpec.airy()
    L = max(_airy_cutoff() - x, 4.0)
    m = 20
    best = None
    while m <= m_max:
        rule = _gauss_rule(x, L, m)
        _, ld = _logdet_matrix(_sym_matrix(kernel, rule))
        _, ld2 = _logdet_matrix(_sym_matrix(kernel, _gauss_rule(x, L, 2 * m)))
        change = abs(ld2 - ld)
        scale = max(1.0, abs(ld2))
        if change < target_accuracy * scale:
            return _gauss_rule(x, L, m, change)
        if best is not None and change > 4 * best[1]:
            break
        if best is None or change < best[1]:
            best = (m, change)
        m = int(m * 1.5)
    return _gauss_rule(x, L, best[0], best[1])


def _sym_matrix(kernel: KernelSpec, rule: QuadratureRule):
    s = np.sqrt(rule.weights)
    K = kernel.matrix(rule.nodes)
    return s[:, None] * K * s[None, :]


@dataclass(frozen=True, eq=False)
class FredholmContext:
    rule: QuadratureRule
    kernel: KernelSpec
    M: np.ndarray
    logdet: float
    spectral_radius: float


def fredholm_context(kernel: KernelSpec, x, rule: QuadratureRule | None = None):
    rule = rule or build_rule(x, 1e-12, kernel)
    if abs(rule.x - x) > 1e-14:
        raise ValueError("rule was built for a different left endpoint")
    M = _sym_matrix(kernel, rule)
    rho = float(np.max(np.abs(np.linalg.eigvals(M)))) if M.size else 0.0
    if rho >= 1.0:
        raise DomainTooFarLeftError(f"spectral radius {rho:.6f} >= 1 at x = {x}")
    sign, ld = _logdet_matrix(M)
    if sign <= 0:
        raise DomainTooFarLeftError(f"det(I - K) is not positive at x = {x}")
    return FredholmContext(rule=rule, kernel=kernel, M=M, logdet=float(ld), spectral_radius=rho)


def fredholm_logdet(kernel: KernelSpec, x, rule: QuadratureRule | None = None):
    """log det(I - K) on (x, infinity)."""
    return fredholm_context(kernel, x, rule).logdet


# ---------------------------------------------------------------------------
# resolvent of the Airy kernel

@dataclass(frozen=True, eq=False)
class ResolventFunctionals:
    x: float
    R_xx: float
    rho: np.ndarray          # (I+R)A at the nodes
    rho_x: float             # (I+R)A at u = x
    sigma_x: float           # (I+R)A' at u = x
    AA: float                # <(I+R)A, A>
    ApA: float               # <(I+R)A', A>
    ApAp: float              # <(I+R)A', A'>
    AApp: float              # <(I+R)A, A''>
    inverse_residual: float  # ||(I-M)(I+R_M) - I||
    rule: QuadratureRule = field(repr=False)


def resolvent_functionals(x, rule: QuadratureRule | None = None):
    rule = rule or build_rule(x, 1e-13)
    u, w = rule.nodes, rule.weights
    s = np.sqrt(w)
    K = airy_kernel(u[:, None], u[None, :])
    M = s[:, None] * K * s[None, :]
    I = np.eye(len(u))
    inv = np.linalg.inv(I - M)
    A, Ap = airy_eval(u)
    # (I+R)f at the nodes, in the symmetrised variables
    rho = inv @ (s * A) / s
    sig = inv @ (s * Ap) / s
    kx = airy_kernel(x, u)
    Ax, Apx = airy_eval(x)
    rho_x = Ax + np.sum(kx * w * rho)
    sig_x = Apx + np.sum(kx * w * sig)
    # R(., x) solves (I - K) R(., x) = K(., x)
    Rcol = inv @ (s * kx) / s
    R_xx = airy_kernel(x, x) + np.sum(kx * w * Rcol)
    inv_res = float(np.max(np.abs((I - M) @ inv - I)))
    return ResolventFunctionals(
        x=float(x), R_xx=float(R_xx), rho=rho, rho_x=float(rho_x), sigma_x=float(sig_x),
        AA=float(np.sum(w * rho * A)), ApA=float(np.sum(w * sig * A)),
        ApAp=float(np.sum(w * sig * Ap)), AApp=float(np.sum(w * rho * u * A)),
        inverse_residual=inv_res, rule=rule)


def trace_matrices(r, rule: QuadratureRule):
    """Symmetrised L_i = (I+R) K_i, i = 1, 2, 3, as matrices on the rule."""
    u, w = rule.nodes, rule.weights
    s = np.sqrt(w)
    sym = s[:, None] * s[None, :]
    M0 = airy_kernel(u[:, None], u[None, :]) * sym
    inv = np.linalg.inv(np.eye(len(u)) - M0)
    return [inv @ (expansion_term(i, r, u[:, None], u[None, :]) * sym) for i in (1, 2, 3)]


def trace_expansion(r, x, rule: QuadratureRule | None = None):
    """(Q1, Q2, Q3) from -Tr L1, -Tr(L2 + L1^2/2), -Tr(L3 + L1 L2 + L1^3/3)."""
    rule = rule or build_rule(x, 1e-13)
    L1, L2, L3 = trace_matrices(r, rule)
    Q1 = -np.trace(L1)
    Q2 = -np.trace(L2 + 0.5 * L1 @ L1)
    Q3 = -np.trace(L3 + L1 @ L2 + L1 @ L1 @ L1 / 3.0)
    return float(Q1), float(Q2), float(Q3)


def trace_expansion_closed(r, f: ResolventFunctionals):
    """(Q1, Q2, Q3) reduced to the resolvent brackets."""
    Q1 = r * f.AA
    Q2 = -(r**2 / 2) * f.rho_x**2
    Q3 = (r**3 / 3) * (f.rho_x**2 * f.AA - f.rho_x * f.sigma_x) + (r * f.x / 3) * f.AA
    return Q1, Q2, Q3


# ---------------------------------------------------------------------------
# Painleve route

@lru_cache(maxsize=4)
def default_painleve(alpha_min=-10.0, alpha_max=8.0):
    return hastings_mcleod(alpha_min, alpha_max)


@lru_cache(maxsize=8)
def _q0_parts(sol: PainleveIISolution):
    g = sol.cheb
    sq = g * g
    ident = C.Chebyshev.identity(domain=g.domain)
    b = float(sol.grid[-1])
    A, Ap = airy_eval(b)
    t0 = Ap**2 - b * A**2                               # int_b^inf Ai^2
    t1 = -(b**2 * A**2 - b * Ap**2 + A * Ap) / 3.0      # int_b^inf s Ai^2
    i0 = sq.integ(lbnd=b)                               # int_b^x g^2
    i1 = (ident * sq).integ(lbnd=b)
    return i0, i1, t0, t1


def _q0_and_prime(x, sol):
    x = np.asarray(x, dtype=float)
    if np.any(x < sol.grid[0] - 1e-12):
        raise UnsupportedDomainError("x below the Painleve grid")
    b = float(sol.grid[-1])
    i0, i1, t0, t1 = _q0_parts(sol)
    xi = np.minimum(x, b)
    m0 = -i0(xi) + t0       # int_x^inf g^2
    m1 = -i1(xi) + t1       # int_x^inf s g^2
    # beyond the collocation interval g is Ai: use the closed forms directly
    if np.any(x > b):
        A, Ap = airy_eval(np.where(x > b, x, b))
        m0 = np.where(x > b, Ap**2 - x * A**2, m0)
        m1 = np.where(x > b, -(x**2 * A**2 - x * Ap**2 + A * Ap) / 3.0, m1)
    return -(m1 - x * m0), m0


def tracy_widom_q0(x, sol: PainleveIISolution | None = None):
    """Q_0(x) = -int_x^inf (s - x) g(s)^2 ds."""
    sol = sol or default_painleve()
    q, _ = _q0_and_prime(x, sol)
    return float(q) if np.ndim(q) == 0 else q


def tracy_widom_q0_prime(x, sol: PainleveIISolution | None = None):
    """Q_0'(x) = int_x^inf g(s)^2 ds."""
    sol = sol or default_painleve()
    _, qp = _q0_and_prime(x, sol)
    return float(qp) if np.ndim(qp) == 0 else qp
