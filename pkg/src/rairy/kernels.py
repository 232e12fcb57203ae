"""Airy kernel, r-Airy kernel and the terms of its large-|tau| expansion."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .specfun import (OutlierAirySpec, UnsupportedDomainError, _panels, airy_eval,
                      outlier_airy)

__all__ = [
    "KernelSpec",
    "airy_kernel",
    "r_airy_kernel",
    "r_airy_kernel_finite_rank",
    "expansion_term",
    "expansion_remainder",
    "UnsupportedOrderError",
]

DIAG_THRESHOLD = 1e-4


class UnsupportedOrderError(ValueError):
    pass


def _check(r, tau):
    if int(r) != r or r < 0:
        raise UnsupportedDomainError("r must be a nonnegative integer")
    if tau > 0:
        raise UnsupportedDomainError("tau > 0 is outside the supported domain")


def airy_kernel(u, v):
    """(Ai(u)Ai'(v) - Ai'(u)Ai(v)) / (u - v), regularised near the diagonal."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    u, v = np.broadcast_arrays(u, v)
    Au, Apu = airy_eval(u.ravel())
    Av, Apv = airy_eval(v.ravel())
    d = (u - v).ravel()
    near = np.abs(d) <= DIAG_THRESHOLD
    out = np.empty_like(d)
    far = ~near
    out[far] = (Au[far] * Apv[far] - Apu[far] * Av[far]) / d[far]
    if near.any():
        # even expansion about the midpoint, half-gap e:
        # K = Ai'^2 - s Ai^2 + e^2 (2 s Ai'^2 - 2 s^2 Ai^2 + Ai Ai') / 3
        s = 0.5 * (u.ravel()[near] + v.ravel()[near])
        e = 0.5 * d[near]
        A, Ap = airy_eval(s)
        out[near] = Ap**2 - s * A**2 + e**2 * (2 * s * Ap**2 - 2 * s**2 * A**2 + A * Ap) / 3
    out = out.reshape(u.shape)
    return float(out) if out.ndim == 0 else out


def _w_extent(r, tau, vmin):
    # A_r^+(s) ~ (|tau| + sqrt s)^r Ai(s); go until that is below ~1e-18
    s = max(vmin, 0.0) + 4.0
    while True:
        A = airy_eval(s)[0]
        if (abs(tau) + math.sqrt(s) + 1.0) ** r * A * (1 + s) ** max(r - 1, 0) < 1e-18:
            break
        s += 0.5
    return s - vmin


def r_airy_kernel(u, v, r, tau, panel=0.5, nq=16):
    """K_tau^(r)(u, v) = int_0^inf A_r^-(w+u) A_r^+(w+v) dw by composite Gauss rules.

    u and v may be arrays; the result is the matrix over (u_i, v_j) when both
    are 1-d arrays, or a scalar for scalar input.
    """
    _check(r, tau)
    scalar = np.ndim(u) == 0 and np.ndim(v) == 0
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    W = _w_extent(r, tau, float(min(v.min(), u.min())))
    w, wt = _panels(np.zeros(1), np.array([W]), panel, nq)
    w, wt = w[0], wt[0]
    mspec = OutlierAirySpec(r, tau, "minus")
    pspec = OutlierAirySpec(r, tau, "plus")
    Am = outlier_airy((u[:, None] + w[None, :]).ravel(), mspec).reshape(len(u), len(w))
    Ap = outlier_airy((v[:, None] + w[None, :]).ravel(), pspec).reshape(len(v), len(w))
    K = (Am * wt) @ Ap.T
    return float(K[0, 0]) if scalar else K


def r_airy_kernel_finite_rank(u, v, r, tau):
    """Same kernel through the identity K^(r) = K_Ai + sum_j A_{j+1}^-(u) A_j^+(v).

    The identity follows by telescoping (d/du + d/dv) over the lowering and
    raising relations of the outlier functions.
    """
    _check(r, tau)
    scalar = np.ndim(u) == 0 and np.ndim(v) == 0
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    K = airy_kernel(u[:, None], v[None, :])
    K = np.atleast_2d(K)
    for j in range(r):
        am = outlier_airy(u, OutlierAirySpec(j + 1, tau, "minus"))
        ap = outlier_airy(v, OutlierAirySpec(j, tau, "plus"))
        K = K + np.outer(am, ap)
    return float(K[0, 0]) if scalar else K


def expansion_term(i, r, u, v):
    """i-th coefficient K_i of the expansion of K^(r)_tau in powers of 1/tau."""
    if i not in (0, 1, 2, 3):
        raise UnsupportedOrderError("only K_0 .. K_3 are available")
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    K0 = airy_kernel(u, v)
    if i == 0:
        return K0
    Au, Apu = airy_eval(u)
    Av, Apv = airy_eval(v)
    if i == 1:
        return -r * Au * Av
    if i == 2:
        return -(r**2 / 2) * (Apu * Av + Au * Apv) + (r / 2) * (u - v) * K0
    A2u, A2v = u * Au, v * Av
    return (-(r**3 / 6) * (A2u * Av + 2 * Apu * Apv + Au * A2v)
            + (r**2 / 2) * (v - u) * Au * Av
            - (r / 3) * (A2u * Av + Au * A2v - Apu * Apv))


def expansion_term_parts(i, r, u, v):
    """K_i split by powers of r, as {power: value} (used by the symmetry checks)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    K0 = airy_kernel(u, v)
    Au, Apu = airy_eval(u)
    Av, Apv = airy_eval(v)
    if i == 0:
        return {0: K0}
    if i == 1:
        return {1: -r * Au * Av}
    if i == 2:
        return {2: -(r**2 / 2) * (Apu * Av + Au * Apv), 1: (r / 2) * (u - v) * K0}
    if i == 3:
        A2u, A2v = u * Au, v * Av
        return {3: -(r**3 / 6) * (A2u * Av + 2 * Apu * Apv + Au * A2v),
                2: (r**2 / 2) * (v - u) * Au * Av,
                1: -(r / 3) * (A2u * Av + Au * A2v - Apu * Apv)}
    raise UnsupportedOrderError("only K_0 .. K_3 are available")


def expansion_remainder(r, tau, order, u, v):
    """K^(r)_tau(u, v) minus the expansion through 1/tau^order."""
    if tau > -2:
        raise UnsupportedDomainError("expansion remainder needs tau <= -2")
    if order not in (0, 1, 2, 3):
        raise UnsupportedOrderError("order must be 0..3")
    K = r_airy_kernel(u, v, r, tau)
    s = sum(expansion_term(i, r, u, v) / tau**i for i in range(order + 1))
    return K - s


@dataclass(frozen=True)
class KernelSpec:
    """Tagged kernel: 'airy', 'rairy', 'term' (K_i) or 'truncated' (partial sum)."""

    variant: str = "airy"
    r: int = 0
    tau: float = 0.0
    i: int = 0
    order: int = 0
    tol: float = 1e-12
    route: str = "finite_rank"

    def __post_init__(self):
        if self.variant not in ("airy", "rairy", "term", "truncated", "zero"):
            raise ValueError(f"unknown kernel variant {self.variant!r}")
        if self.variant in ("rairy", "truncated"):
            _check(self.r, self.tau)
        if self.variant == "term" and self.i not in (0, 1, 2, 3):
            raise UnsupportedOrderError("only K_0 .. K_3 are available")
        if self.variant == "truncated" and self.order not in (0, 1, 2, 3):
            raise UnsupportedOrderError("order must be 0..3")

    @classmethod
    def airy(cls):
        return cls("airy")

    @classmethod
    def rairy(cls, r, tau, route="finite_rank"):
        return cls("rairy", r=r, tau=tau, route=route)

    def matrix(self, nodes_u, nodes_v=None):
        u = np.asarray(nodes_u, dtype=float)
        v = u if nodes_v is None else np.asarray(nodes_v, dtype=float)
        if self.variant == "zero":
            return np.zeros((len(u), len(v)))
        if self.variant == "airy" or (self.variant == "rairy" and self.r == 0):
            return airy_kernel(u[:, None], v[None, :])
        if self.variant == "rairy":
            if self.route == "quadrature":
                return r_airy_kernel(u, v, self.r, self.tau)
            return r_airy_kernel_finite_rank(u, v, self.r, self.tau)
        if self.variant == "term":
            return expansion_term(self.i, self.r, u[:, None], v[None, :])
        return sum(expansion_term(i, self.r, u[:, None], v[None, :]) / self.tau**i
                   for i in range(self.order + 1))

    def __call__(self, u, v):
        return self.matrix(np.atleast_1d(u), np.atleast_1d(v)).squeeze()[()]
