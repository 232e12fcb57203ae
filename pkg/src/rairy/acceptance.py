"""The twelve acceptance checks, shared by the test suite and `rairy verify-all`.

Each check returns a CriterionResult; `fast=True` shrinks sample sizes and
grids for smoke runs, but thresholds never change.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

__all__ = ["CriterionResult", "CRITERIA", "run_all"]


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    passed: bool
    seconds: float
    budget: float
    summary: str
    detail: dict = field(default_factory=dict, compare=False)

    @property
    def within_budget(self):
        return self.seconds <= self.budget

    def line(self):
        tag = "PASS" if self.passed and self.within_budget else "FAIL"
        return (f"[{tag}] criterion {self.number:2d} {self.title}: {self.summary} "
                f"({self.seconds:.1f}s, budget {self.budget:g}s)")


def _timed(number, title, budget):
    def wrap(fn):
        def run(fast=False):
            t0 = time.perf_counter()
            ok, summary, detail = fn(fast)
            return CriterionResult(number, title, bool(ok), time.perf_counter() - t0, budget,
                                   summary, detail)
        run.number = number
        run.title = title
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run
    return wrap


@_timed(1, "two-route Tracy-Widom", 10)
def c01(fast):
    from .fredholm import build_rule, fredholm_logdet, tracy_widom_q0
    from .kernels import KernelSpec

    errs = {}
    for x in (-4.0, -2.0, 0.0, 2.0, 4.0):
        k = KernelSpec.airy()
        errs[x] = abs(fredholm_logdet(k, x, build_rule(x, 1e-12, k)) - tracy_widom_q0(x))
    worst = max(errs.values())
    return worst <= 1e-7, f"max |Fredholm - Painleve| = {worst:.2e} (<= 1e-7)", errs


@_timed(2, "outlier functions vs contour quadrature", 30)
def c02(fast):
    from .specfun import OutlierAirySpec, contour_quadrature, outlier_airy

    errs = {}
    for r in (1, 2, 3):
        for tau in (0.0, -1.0, -4.0):
            for sign in ("plus", "minus"):
                spec = OutlierAirySpec(r, tau, sign)
                for u in (-2.0, 0.0, 2.0):
                    a = outlier_airy(u, spec)
                    c = contour_quadrature(u, spec)
                    errs[r, tau, sign, u] = max(abs(a - c.real), abs(c.imag))
    worst = max(errs.values())
    return worst <= 1e-8, f"max deviation {worst:.2e} over 54 points (<= 1e-8)", errs


@_timed(3, "kernel expansion remainder", 60)
def c03(fast):
    from .kernels import expansion_remainder

    scaled = {}
    ok = True
    for r in (1, 2):
        for uv in ((0.0, 0.0), (1.0, -1.0)):
            s8 = expansion_remainder(r, -8.0, 3, *uv) * 8.0**4
            s16 = expansion_remainder(r, -16.0, 3, *uv) * 16.0**4
            scaled[r, uv] = (s8, s16)
            ratio = s16 / s8
            ok &= 0.5 < ratio < 2.0
    r8 = abs(expansion_remainder(1, -8.0, 3, 0.0, 0.0))
    r16 = abs(expansion_remainder(1, -16.0, 3, 0.0, 0.0))
    ratio_test = 2**-4 / 2 <= r16 / r8 <= 2 * 2**-4
    ok &= ratio_test
    bad = [f"r={r} (u,v)={uv}: {a:+.4f} -> {b:+.4f}" for (r, uv), (a, b) in scaled.items()
           if not 0.5 < b / a < 2.0]
    summary = ("tau^4-scaled remainders stable within 2x; ratio test "
               f"{r16 / r8:.4f}" if ok else "unstable: " + "; ".join(bad)
               + f"; ratio test {'ok' if ratio_test else 'failed'} ({r16 / r8:.4f})")
    return ok, summary, {"scaled": scaled, "ratio": r16 / r8}


@_timed(4, "probability-law property", 60)
def c04(fast):
    from .fredholm import build_rule, fredholm_logdet
    from .kernels import KernelSpec

    xs = np.arange(-6.0, 8.0 + 1e-9, 1.0 if fast else 0.5)
    detail = {}
    ok = True
    for r in (1, 2):
        for tau in (0.0, -2.0, -6.0):
            k = KernelSpec.rairy(r, tau)
            F = np.exp([fredholm_logdet(k, x, build_rule(x, 1e-10, k)) for x in xs])
            mono = bool(np.all(np.diff(F) >= 0))
            good = mono and F[-1] >= 1 - 1e-6 and F[0] <= 1e-3
            detail[r, tau] = (mono, F[0], 1 - F[-1])
            ok &= good
    return ok, "monotone, F(-6) <= 1e-3, F(8) >= 1-1e-6 for all six (r, tau)", detail


PDE_PROBES = ((-3.0, 0.0), (-3.0, 1.0), (-5.0, 0.0))


@_timed(5, "r-Airy PDE residual", 1200)
def c05(fast):
    from .pde import q_surface, r_airy_pde_residual

    h = 0.05
    detail = {}
    ok = True
    for r in (1, 2):
        for tau, x in PDE_PROBES:
            S = q_surface(r, (tau - 8 * h, tau + 8 * h), (x - 8 * h, x + 8 * h), (h, h))
            coarse = r_airy_pde_residual(S, (tau, x), stride=2).relative
            fine = r_airy_pde_residual(S, (tau, x), stride=1).relative
            detail[r, tau, x] = (coarse, fine, float(S.accuracy.max()))
            ok &= coarse <= 5e-3 and fine < coarse
    worst = max(v[0] for v in detail.values())
    return ok, f"worst relative residual {worst:.2e} at h=0.1, all decrease at h=0.05", detail


@_timed(6, "finite-n PDE residual", 300)
def c06(fast):
    from .finiten import SourceEnsemble
    from .pde import finite_n_pde_residual

    detail = {}
    ok = True
    for n, k1, al, b in ((2, 1, 1.0, 2.0), (4, 1, 2.0, 4.0)):
        q, d, _ = finite_n_pde_residual(SourceEnsemble(n, k1, al), b, h=0.05)
        detail[n, k1, al, b] = (q.relative, d.relative)
        ok &= q.relative <= 5e-3 and d.relative <= 5e-3
    worst = max(max(v) for v in detail.values())
    return ok, f"worst relative residual {worst:.2e} (quartic and determinant forms)", detail


KP_PROBES = ((3, 1, 0.5, 1.0), (2, 1, 1.0, None))
VIRASORO_PROBES = ((2, 1, 1.0, 2.0), (3, 2, 1.0, 2.0))


def _step_orders(coarse, fine, floor=1e-9):
    """Ratios res(h)/res(h/2) for non-degenerate residuals clear of rounding noise."""
    c, f = coarse.residuals, fine.residuals
    return {k: c[k] / f[k] for k in c
            if k not in coarse.degenerate and c[k] > floor and f[k] > 0}


@_timed(7, "3-KP and Virasoro identities", 300)
def c07(fast):
    from .finiten import SourceEnsemble, kp_identity_check, virasoro_check

    worst = 0.0
    orders = {}
    for (n, k1, al, b) in KP_PROBES:
        e = SourceEnsemble(n, k1, al)
        worst = max(worst, kp_identity_check(e, b).worst)
        c = kp_identity_check(e, b, 1e-2, richardson=False)
        f = kp_identity_check(e, b, 5e-3, richardson=False)
        orders.update({("kp", n, k1, k): v for k, v in _step_orders(c, f).items()})
    for (n, k1, al, b) in VIRASORO_PROBES:
        e = SourceEnsemble(n, k1, al)
        worst = max(worst, virasoro_check(e, b).worst)
        c = virasoro_check(e, b, 1e-2, richardson=False)
        f = virasoro_check(e, b, 5e-3, richardson=False)
        orders.update({("vir", n, k1, k): v for k, v in _step_orders(c, f).items()})
    order_ok = all(3.0 <= v <= 5.5 for v in orders.values()) and len(orders) > 0
    ok = worst <= 1e-4 and order_ok
    return ok, (f"worst residual {worst:.2e} (<= 1e-4); step-halving ratios "
                f"{min(orders.values()):.2f}..{max(orders.values()):.2f} (second order)"), \
        {"worst": worst, "orders": orders}


@_timed(8, "whole-line tau ratio law", 30)
def c08(fast):
    from .finiten import log_tau

    a1, a2 = 0.5, 1.0
    detail = {}
    for k1, k2 in ((1, 1), (1, 2), (2, 2)):
        expect = k1 * k2 * math.log(a2 / a1) + k1 * (a2**2 - a1**2) / 2
        for route in ("auto", "quadrature"):
            got = log_tau(k1, k2, a2, route=route)[1] - log_tau(k1, k2, a1, route=route)[1]
            detail[k1, k2, route] = abs(math.expm1(got - expect))
    worst = max(detail.values())
    return worst <= 1e-8, f"max relative deviation {worst:.2e} (<= 1e-8), both moment routes", detail


@_timed(9, "remote-past expansion", 1200)
def c09(fast):
    from .asymptotics import asymptotic_compare, expansion_coefficients, q0_derivatives
    from .fredholm import build_rule, trace_expansion

    taus = (-6.0, -8.0, -12.0, -16.0)
    exps = {k: asymptotic_compare(1, 0.0, taus, k).exponent for k in (1, 3, 5)}
    ok = all(abs(exps[k] - (k + 1)) <= 0.7 for k in exps)
    cross = {}
    for r in (1, 2):
        es = expansion_coefficients(q0_derivatives([-1.0, 0.0, 1.0]), r)
        for j, x in enumerate((-1.0, 0.0, 1.0)):
            tr = trace_expansion(r, x, build_rule(x, 1e-13))
            cross[r, x] = max(abs(es.Q[i][j] - tr[i - 1]) for i in (1, 2, 3))
    worst = max(cross.values())
    ok &= worst <= 1e-4
    s = ", ".join(f"k={k}: {v:.2f}" for k, v in exps.items())
    return ok, f"decay exponents {s}; Painleve vs traces {worst:.1e}", {"exponents": exps,
                                                                          "cross": cross}


@_timed(10, "edge dichotomy at desk scale", 900)
def c10(fast):
    from .finiten import SourceEnsemble, convergence_rate, edge_ks, limit_cdf, sample_edge

    n = 400
    m = 2000 if fast else 20000
    detail = {}
    ok = True
    for rho, limit in ((0.5, limit_cdf(0)), (1.0, limit_cdf(1, 0.0))):
        lmax = sample_edge(SourceEnsemble(n, 1, rho * math.sqrt(n)), m, seed=20240)
        y = (lmax - 2 * math.sqrt(n)) * n ** (1 / 6)
        stat, p = edge_ks(y, limit)
        detail[rho] = (stat, p, float(np.mean(y)))
        ok &= p >= 0.01
    p_exp, devs = convergence_rate([4, 6, 8, 10], 0.0, r=1)
    detail["exponent"] = p_exp
    ok &= -0.6 <= p_exp <= -0.15
    summary = (f"KS p-values rho=0.5: {detail[0.5][1]:.1e}, rho=1: {detail[1.0][1]:.1e} "
               f"(>= 0.01); convergence exponent {p_exp:.3f} in [-0.6, -0.15]")
    return ok, summary, detail


@_timed(11, "geometry closed forms", 1)
def c11(fast):
    from .finiten import cusp_geometry, tangency_point

    dev = 0.0
    for rho0 in (0.25, 0.5, 1.0, 2.0, 4.0):
        for n in (1, 100, 10000):
            y0, t0 = tangency_point(rho0, n)
            dev = max(dev, abs(y0 - math.sqrt(2 * n * t0 * (1 - t0))) / max(1.0, y0))
    lim = 0.0
    for a in (0.5, 1.0, 2.0):
        cg = cusp_geometry(a, 1e-45)
        n = 100
        y0, t0 = tangency_point(math.sqrt(2) * a, n)
        lim = max(lim, abs(cg.x0 * math.sqrt(n) - y0), abs(cg.t0 - t0))
    ok = dev <= 1e-12 and lim <= 1e-10
    return ok, f"tangency on curve to {dev:.1e}; cusp p->0 limit off by {lim:.1e}", \
        {"curve": dev, "cusp": lim}


@_timed(12, "resolvent identities", 30)
def c12(fast):
    from .fredholm import build_rule, resolvent_functionals, trace_matrices

    detail = {}
    for x in (-1.0, 0.0, 1.0):
        rule = build_rule(x, 1e-13)
        f = resolvent_functionals(x, rule)
        L1 = trace_matrices(1, rule)[0]
        detail[x] = {
            "diagonal resolvent": abs(f.R_xx - f.AA),
            "first-derivative bracket": abs(2 * f.ApA - f.AA**2 + f.rho_x**2),
            "second-derivative bracket": abs(2 * f.AApp - f.ApAp - x * f.AA),
            "integration by parts": abs(f.ApAp + f.rho_x * f.sigma_x + f.AApp - f.ApA * f.AA),
            "trace of L1 squared": abs(np.trace(L1 @ L1) - f.AA**2),
        }
    worst = max(max(d.values()) for d in detail.values())
    return worst <= 1e-7, f"worst identity defect {worst:.1e} (<= 1e-7)", detail


CRITERIA = (c01, c02, c03, c04, c05, c06, c07, c08, c09, c10, c11, c12)


def run_all(fast=False, only=None, echo=print):
    results = []
    for c in CRITERIA:
        if only and c.number not in only:
            continue
        res = c(fast)
        if echo:
            echo(res.line())
        results.append(res)
    return results
