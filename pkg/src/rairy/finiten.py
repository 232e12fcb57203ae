"""Finite-n Gaussian Hermitian ensemble with a rank-k1 external source.

Exact probabilities come from block moment determinants; the moment
matrices are written in the monic Hermite basis, which leaves every
determinant unchanged (unimodular triangular change of basis) but keeps the
linear algebra well conditioned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .specfun import UnsupportedDomainError

__all__ = [
    "SourceEnsemble",
    "MomentDeformation",
    "HalfLine",
    "WHOLE_LINE",
    "BrownianScaling",
    "SpectrumSample",
    "CuspGeometry",
    "DivergentWeightError",
    "log_tau",
    "tau_moment_det",
    "pn_probability",
    "log_pn",
    "sample_spectrum",
    "sample_edge",
    "edge_rescale",
    "convergence_rate",
    "limit_cdf",
    "edge_ks",
    "brownian_to_matrix",
    "matrix_to_brownian",
    "time_change",
    "time_change_inverse",
    "tangency_point",
    "cusp_geometry",
    "kp_identity_check",
    "virasoro_check",
]

N_MAX = 12


class DivergentWeightError(ValueError):
    pass


@dataclass(frozen=True)
class SourceEnsemble:
    n: int
    k1: int
    alpha: float

    def __post_init__(self):
        if not (0 <= self.k1 <= self.n):
            raise UnsupportedDomainError("need 0 <= k1 <= n")
        if self.alpha < 0:
            raise UnsupportedDomainError("alpha must be >= 0")

    @property
    def k2(self):
        return self.n - self.k1


@dataclass(frozen=True)
class MomentDeformation:
    t1: float = 0.0
    t2: float = 0.0
    s1: float = 0.0
    s2: float = 0.0
    u1: float = 0.0
    u2: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        for name in ("t1", "t2", "s1", "s2", "u1", "u2", "beta"):
            if abs(getattr(self, name)) > 0.1:
                raise UnsupportedDomainError(f"|{name}| must be <= 0.1")

    def shifted(self, **kw):
        vals = {k: getattr(self, k) + v for k, v in kw.items()}
        return replace(self, **vals)


@dataclass(frozen=True)
class HalfLine:
    b: float


WHOLE_LINE = HalfLine(math.inf)
ZERO = MomentDeformation()


# ---------------------------------------------------------------------------
# moments

def _hermite_table(z, deg):
    """He_0..He_deg at points z, shape (deg+1, len(z))."""
    H = np.empty((deg + 1, len(z)))
    H[0] = 1.0
    if deg >= 1:
        H[1] = z
    for k in range(1, deg):
        H[k + 1] = z * H[k] - k * H[k - 1]
    return H


def _gauss_block(c1, c2, rows, ncols, b, panel=0.5, nq=24):
    """int_{-inf}^b He_i He_j exp(-z^2/2 + c1 z + c2 z^2 - peak) dz and the peak exponent."""
    a = 0.5 - c2
    if a <= 0:
        raise DivergentWeightError("the weight is not integrable (beta too large)")
    sd = 1.0 / math.sqrt(2 * a)
    mu = c1 / (2 * a)
    peak = c1 * mu - a * mu**2
    reach = sd * (2.0 * math.sqrt(2.0 * (rows + ncols)) + 12.0)
    lo = mu - reach
    hi = min(b, mu + reach)
    if hi <= lo:
        return np.zeros((rows, ncols)), peak
    npan = max(1, int(math.ceil((hi - lo) / (panel * sd))))
    t, w = np.polynomial.legendre.leggauss(nq)
    edges = np.linspace(lo, hi, npan + 1)
    half = 0.5 * np.diff(edges)
    z = (edges[:-1, None] + half[:, None] * (t + 1)).ravel()
    wt = (half[:, None] * w).ravel()
    wt = wt * np.exp(-a * z**2 + c1 * z - peak)
    H = _hermite_table(z, max(rows, ncols))
    # orthonormal-ish scaling keeps entries O(1); undone in log_tau
    scale = np.exp(-0.5 * np.array([math.lgamma(k + 1) for k in range(H.shape[0])]))
    Hs = H * scale[:, None]
    return (Hs[:rows] * wt) @ Hs[:ncols].T, peak


def _closed_block(alpha, rows, ncols):
    """Whole-line block with weight exp(-z^2/2 + alpha z), exact Gaussian moments."""
    peak = alpha**2 / 2
    M = np.zeros((rows, ncols))
    for i in range(rows):
        for j in range(ncols):
            s = 0.0
            for k in range(min(i, j) + 1):
                s += math.comb(i, k) * math.comb(j, k) * math.factorial(k) * alpha ** (i + j - 2 * k)
            M[i, j] = s * math.sqrt(2 * math.pi)
    scale = np.exp(-0.5 * np.array([math.lgamma(k + 1) for k in range(max(rows, ncols) + 1)]))
    return M * scale[:rows, None] * scale[None, :ncols], peak


def log_tau(k1, k2, alpha, E: HalfLine = WHOLE_LINE, d: MomentDeformation = ZERO,
            route="auto"):
    """(sign, log|tau_{k1 k2}|) for the block moment determinant.

    route="auto" uses exact Gaussian moments on the undeformed whole line and
    composite Gauss-Legendre moments otherwise; "quadrature" forces the latter.
    """
    n = k1 + k2
    if n > N_MAX:
        raise UnsupportedDomainError(f"n = {n} exceeds the dense moment regime (n <= {N_MAX})")
    if k1 < 0 or k2 < 0:
        raise UnsupportedDomainError("negative block size")
    if n == 0:
        return 1.0, 0.0
    closed = route == "auto" and math.isinf(E.b) and d == ZERO
    blocks = []
    shift = 0.0
    if k1:
        if closed:
            B1, p1 = _closed_block(alpha, k1, n)
        else:
            B1, p1 = _gauss_block(alpha + d.t1 - d.s1, d.beta + d.t2 - d.s2, k1, n, E.b)
        blocks.append(B1)
        shift += k1 * p1
    if k2:
        if closed:
            B2, p2 = _closed_block(0.0, k2, n)
        else:
            B2, p2 = _gauss_block(d.t1 - d.u1, d.t2 - d.u2, k2, n, E.b)
        blocks.append(B2)
        shift += k2 * p2
    sign, ld = np.linalg.slogdet(np.vstack(blocks))
    lf = [math.lgamma(k + 1) for k in range(n)]
    ld += 0.5 * (sum(lf) + sum(lf[:k1]) + sum(lf[:k2])) + shift
    return float(sign), float(ld)


def tau_moment_det(ens: SourceEnsemble, E: HalfLine = WHOLE_LINE, d: MomentDeformation = ZERO):
    sign, ld = log_tau(ens.k1, ens.k2, ens.alpha, E, d)
    return sign * math.exp(ld)


def log_pn(ens: SourceEnsemble, b):
    """log P(all eigenvalues <= b)."""
    s1, l1 = log_tau(ens.k1, ens.k2, ens.alpha, HalfLine(b))
    s0, l0 = log_tau(ens.k1, ens.k2, ens.alpha, WHOLE_LINE)
    if s1 * s0 <= 0:
        return -math.inf
    return l1 - l0


def pn_probability(ens: SourceEnsemble, b):
    if math.isinf(b) and b > 0:
        return 1.0
    return math.exp(log_pn(ens, b))


# ---------------------------------------------------------------------------
# Monte Carlo

@dataclass(frozen=True)
class SpectrumSample:
    eigenvalues: np.ndarray
    ensemble: SourceEnsemble
    seed: int | None = None

    @property
    def lmax(self):
        return float(self.eigenvalues[-1])


def _source_diag(ens):
    a = np.zeros(ens.n)
    a[: ens.k1] = ens.alpha
    return a


def _dense_matrix(ens, rng):
    n = ens.n
    X = rng.standard_normal((n, n))
    Y = rng.standard_normal((n, n))
    # diagonal N(0,1); off-diagonal real and imaginary parts of variance 1/2
    H = np.triu(X, 1) + 1j * np.triu(Y, 1)
    H = (H + H.conj().T) / math.sqrt(2.0)
    H[np.diag_indices(n)] = np.diag(X)
    return H + np.diag(_source_diag(ens))


def sample_spectrum(ens: SourceEnsemble, seed) -> SpectrumSample:
    """Eigenvalues of A + H, H Hermitian with density proportional to exp(-Tr H^2 / 2)."""
    if ens.n > 4000:
        raise UnsupportedDomainError("n <= 4000")
    rng = np.random.default_rng(seed)
    ev = np.linalg.eigvalsh(_dense_matrix(ens, rng))
    return SpectrumSample(np.sort(ev), ens, seed)


def _tridiag_lmax(ens, rng):
    from scipy.linalg import eigvalsh_tridiagonal

    n = ens.n
    d = rng.standard_normal(n)
    d[0] += ens.alpha if ens.k1 == 1 else 0.0
    e = np.sqrt(rng.chisquare(2 * np.arange(n - 1, 0, -1)) / 2.0)
    return float(eigvalsh_tridiagonal(d, e, select="i", select_range=(n - 1, n - 1))[0])


def sample_edge(ens: SourceEnsemble, n_samples, seed, method="auto"):
    """Largest eigenvalues of independent draws, one child stream per draw.

    For k1 <= 1 the default uses the Householder-tridiagonal form of the same
    ensemble: the reflection that fixes e_1 leaves the rank-one source alone,
    so the top eigenvalue has exactly the dense-model law at O(n) cost.
    """
    children = np.random.SeedSequence(seed).spawn(n_samples)
    use_tri = method == "tridiagonal" or (method == "auto" and ens.k1 <= 1)
    out = np.empty(n_samples)
    for i, ss in enumerate(children):
        rng = np.random.default_rng(ss)
        if use_tri:
            out[i] = _tridiag_lmax(ens, rng)
        else:
            out[i] = np.linalg.eigvalsh(_dense_matrix(ens, rng))[-1]
    return out


def edge_rescale(sample):
    """(lambda_max - 2 sqrt n) n^(1/6); accepts a SpectrumSample or (lmax, n)."""
    if isinstance(sample, SpectrumSample):
        lmax, n = sample.lmax, sample.ensemble.n
    else:
        lmax, n = sample
    return (lmax - 2.0 * math.sqrt(n)) * n ** (1.0 / 6.0)


def limit_cdf(r=0, tau=0.0, lo=-8.0, hi=6.0, step=0.05):
    """Vectorised CDF of the edge limit law: Tracy-Widom for r = 0, else exp Q(tau, .).

    The r-Airy case is tabulated from Fredholm determinants and interpolated
    with a cubic spline in log space.
    """
    from .fredholm import build_rule, fredholm_logdet, tracy_widom_q0

    if r == 0:
        def F(x):
            x = np.asarray(x, dtype=float)
            return np.where(x < lo, 0.0, np.exp(tracy_widom_q0(np.clip(x, lo, None))))
        return F
    from scipy.interpolate import CubicSpline

    from .kernels import KernelSpec

    k = KernelSpec.rairy(r, tau)
    g = lo + step * np.arange(int(round((hi - lo) / step)) + 1)
    Q = np.array([fredholm_logdet(k, x, build_rule(x, 1e-11, k)) for x in g])
    spline = CubicSpline(g, Q)

    def F(x):
        x = np.asarray(x, dtype=float)
        return np.where(x < lo, 0.0, np.where(x > hi, 1.0, np.exp(spline(np.clip(x, lo, hi)))))
    return F


def edge_ks(values, cdf):
    """Kolmogorov-Smirnov statistic and p-value of rescaled edge values against cdf."""
    from scipy.stats import kstest

    res = kstest(np.asarray(values), cdf)
    return float(res.statistic), float(res.pvalue)


def convergence_rate(ns, x, r=1, limit=None):
    """Fit |log P_n(edge-scaled) - limit(x)| ~ C n^p over the given sizes.

    The source strength is alpha = sqrt(n) (critical) for r = 1, and the
    limit defaults to the r-Airy log-probability at tau = 0 (Tracy-Widom for
    r = 0).  Returns (exponent, deviations).
    """
    from .fredholm import build_rule, fredholm_logdet
    from .kernels import KernelSpec

    if limit is None:
        k = KernelSpec.rairy(r, 0.0) if r else KernelSpec.airy()
        limit = fredholm_logdet(k, x, build_rule(x, 1e-13, k))
    devs = []
    for n in ns:
        ens = SourceEnsemble(n, r, math.sqrt(n) if r else 0.0)
        b = 2 * math.sqrt(n) + x * n ** (-1.0 / 6.0)
        devs.append(abs(log_pn(ens, b) - limit))
    p = np.polyfit(np.log(ns), np.log(devs), 1)[0]
    return float(p), np.array(devs)


# ---------------------------------------------------------------------------
# scaling maps and geometry

@dataclass(frozen=True)
class BrownianScaling:
    t: float
    a: float
    n: int = 1
    rho0: float = 1.0

    @property
    def sigma(self):
        return 0.5 * math.log(self.t / (1 - self.t))

    @property
    def tau0(self):
        return -math.log(self.rho0)

    @property
    def rho(self):
        return self.a * math.sqrt(2 * self.t / (1 - self.t)) / math.sqrt(self.n)


def brownian_to_matrix(t, E_endpoint, a):
    if not 0 < t < 1:
        raise UnsupportedDomainError("t must lie in (0, 1)")
    return a * math.sqrt(2 * t / (1 - t)), E_endpoint * math.sqrt(2 / (t * (1 - t)))


def matrix_to_brownian(t, alpha, b_tilde):
    if not 0 < t < 1:
        raise UnsupportedDomainError("t must lie in (0, 1)")
    return alpha / math.sqrt(2 * t / (1 - t)), b_tilde / math.sqrt(2 / (t * (1 - t)))


def time_change(t_prime):
    """t = 1/(1 + e^{-2t'}); also returns 1/sqrt(t(1-t)) = 2 cosh t'."""
    t = 1.0 / (1.0 + math.exp(-2.0 * t_prime))
    return t, 2.0 * math.cosh(t_prime)


def time_change_inverse(t):
    if not 0 < t < 1:
        raise UnsupportedDomainError("t must lie in (0, 1)")
    return 0.5 * math.log(t / (1 - t))


def tangency_point(rho0, n):
    if rho0 <= 0:
        raise UnsupportedDomainError("rho0 must be positive")
    return rho0 * math.sqrt(2 * n) / (1 + rho0**2), 1.0 / (1 + rho0**2)


@dataclass(frozen=True)
class CuspGeometry:
    a: float
    p: float
    q: float
    x0: float
    t0: float
    mu: float
    c0: float
    A_const: float


def cusp_geometry(a, p):
    if not 0 < p < 1 or a <= 0:
        raise UnsupportedDomainError("need 0 < p < 1 and a > 0")
    q = ((1 - p) / p) ** (1.0 / 3.0)
    t0 = 1.0 / (1.0 + 2 * a**2 * (q**2 - q + 1) / (q + 1) ** 2)
    x0 = (2 * q - 1) * a * t0 / (q + 1)
    mu = ((q**2 - q + 1) / q) ** 0.25
    c0 = math.sqrt(t0 * (1 - t0) / 2)
    A = math.sqrt(q) * (1 - x0 / a) - x0 / (a * math.sqrt(q))
    return CuspGeometry(a=a, p=p, q=q, x0=x0, t0=t0, mu=mu, c0=c0, A_const=A)


# ---------------------------------------------------------------------------
# finite-difference checks of the integrable structure

def _d1(f, h, richardson=True):
    def c(hh):
        return (f(hh) - f(-hh)) / (2 * hh)
    return (4 * c(h) - c(2 * h)) / 3 if richardson else c(h)


def _d11(f, h, richardson=True):
    def c(hh):
        return (f(hh, hh) - f(hh, -hh) - f(-hh, hh) + f(-hh, -hh)) / (4 * hh * hh)
    return (4 * c(h) - c(2 * h)) / 3 if richardson else c(h)


def _rel(a, b, floor=1e-3):
    # floor: some identities are 0 = 0 on the whole line, leaving only noise
    den = max(abs(a), abs(b), floor)
    return abs(a - b) / den


@dataclass
class IdentityReport:
    residuals: dict = field(default_factory=dict)
    values: dict = field(default_factory=dict)

    degenerate: set = field(default_factory=set)

    def set(self, key, lhs, rhs, floor=1e-6):
        """Record an identity lhs = rhs; both sides tiny marks it as 0 = 0."""
        self.residuals[key] = _rel(lhs, rhs)
        if max(abs(lhs), abs(rhs)) < floor:
            self.degenerate.add(key)

    @property
    def worst(self):
        return max(self.residuals.values()) if self.residuals else 0.0


def kp_identity_check(ens: SourceEnsemble, b=None, step=1e-2, richardson=True):
    """Check the j=0 bilinear identities and the four ratio identities.

    b = None means the whole line.
    """
    k1, k2, al = ens.k1, ens.k2, ens.alpha
    if not 1 <= k1 <= ens.n - 1:
        raise UnsupportedDomainError("need 1 <= k1 <= n-1")
    if not 1e-3 <= step <= 5e-2:
        raise UnsupportedDomainError("step must lie in [1e-3, 5e-2]")
    E = WHOLE_LINE if b is None else HalfLine(b)

    def lt(kk1, kk2, **kw):
        return log_tau(kk1, kk2, al, E, MomentDeformation(**kw))

    def f(kk1=k1, kk2=k2, **kw):
        return lt(kk1, kk2, **kw)[1]

    h = step
    rep = IdentityReport()
    s0, l0 = lt(k1, k2)
    sp, lp = lt(k1 + 1, k2)
    sm, lm = lt(k1 - 1, k2)
    rhs_s = -sp * sm * s0 * s0 * math.exp(lp + lm - 2 * l0)
    sp2, lp2 = lt(k1, k2 + 1)
    sm2, lm2 = lt(k1, k2 - 1)
    rhs_u = -sp2 * sm2 * math.exp(lp2 + lm2 - 2 * l0)

    t1s1 = _d11(lambda a, c: f(t1=a, s1=c), h, richardson)
    t1u1 = _d11(lambda a, c: f(t1=a, u1=c), h, richardson)
    rep.values.update(t1s1=t1s1, rhs_s=rhs_s, t1u1=t1u1, rhs_u=rhs_u)
    rep.set("kp_t1s1", t1s1, rhs_s)
    rep.set("kp_t1u1", t1u1, rhs_u)

    # ratio identities
    def ratio_s(**kw):
        return f(k1 + 1, k2, **kw) - f(k1 - 1, k2, **kw)

    def ratio_u(**kw):
        return f(k1, k2 + 1, **kw) - f(k1, k2 - 1, **kw)

    t2s1 = _d11(lambda a, c: f(t2=a, s1=c), h, richardson)
    t1s2 = _d11(lambda a, c: f(t1=a, s2=c), h, richardson)
    t2u1 = _d11(lambda a, c: f(t2=a, u1=c), h, richardson)
    t1u2 = _d11(lambda a, c: f(t1=a, u2=c), h, richardson)
    lhs1 = _d1(lambda e: ratio_s(t1=e), h, richardson)
    lhs2 = -_d1(lambda e: ratio_s(s1=e), h, richardson)
    lhs3 = _d1(lambda e: ratio_u(t1=e), h, richardson)
    lhs4 = -_d1(lambda e: ratio_u(u1=e), h, richardson)
    rep.set("ratio_t1_s", lhs1, t2s1 / t1s1)
    rep.set("ratio_s1_s", lhs2, t1s2 / t1s1)
    rep.set("ratio_t1_u", lhs3, t2u1 / t1u1)
    rep.set("ratio_u1_u", lhs4, t1u2 / t1u1)
    return rep


def virasoro_check(ens: SourceEnsemble, b, step=1e-2, richardson=True):
    """Virasoro constraints on the locus t = s = u = beta = 0, half-line (-inf, b]."""
    k1, k2 = ens.k1, ens.k2
    if ens.n > N_MAX:
        raise UnsupportedDomainError("n too large")

    def f(alpha=ens.alpha, bb=b, **kw):
        return log_tau(k1, k2, alpha, HalfLine(bb), MomentDeformation(**kw))[1]

    h = step
    al = ens.alpha
    rep = IdentityReport()
    fs1 = _d1(lambda e: f(s1=e), h, richardson)
    fa = _d1(lambda e: f(alpha=al + e), h, richardson)
    rep.residuals["s1_alpha"] = 0.0 if k1 == 0 and fs1 == 0 and fa == 0 else _rel(fs1, -fa)
    ft1 = _d1(lambda e: f(t1=e), h, richardson)
    fb = _d1(lambda e: f(bb=b + e), h, richardson)
    rep.set("t1", ft1, -fb + al * k1)
    ft1u1 = _d11(lambda p, q: f(t1=p, u1=q), h, richardson)
    fbb = _d11(lambda p, q: f(bb=b + p + q), h / 2, richardson)
    fab = _d11(lambda p, q: f(alpha=al + p, bb=b + q), h, richardson)
    rep.set("t1u1", ft1u1, -(fbb + fab) - k2)
    ft1s1 = _d11(lambda p, q: f(t1=p, s1=q), h, richardson)
    rep.set("t1s1", ft1s1, fab - k1)
    rep.values.update(fs1=fs1, fa=fa, ft1=ft1, fb=fb, ft1u1=ft1u1, fbb=fbb, fab=fab, ft1s1=ft1s1)
    return rep
