"""Integrals of products of algebraic kinks.

The basic object is

    J(a, c, d; p) = int_R (a + |s|)^(-p) (c + |d - s|)^(-p) ds,   a, c > 0, p > 1,

which is even in d.  :func:`kink_integral` evaluates it in closed form through
Gauss hypergeometric functions; :func:`kink_quad` is an independent adaptive
route (panels split at the kinks plus series tails) used for cross-checks.
"""

from __future__ import annotations

import warnings
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import DomainError, QuadratureError


@lru_cache(maxsize=None)
def _gl(k: int):
    return np.polynomial.legendre.leggauss(k)


@lru_cache(maxsize=64)
def _connection(p):
    g = special.gamma
    return g(2 * p) * g(1 - p) / g(p), g(2 * p) * g(p - 1) / (g(p) * g(2 * p - 1))


def _half_line(A, C, p):
    """int_0^inf (A + u)^(-p) (C + u)^(-p) du.

    Equals hi^(1-2p)/(2p-1) * 2F1(p, 2p-1; 2p; 1 - lo/hi).  For lo/hi < 1/2
    the hypergeometric function is continued to w = lo/hi, where the series
    converges fast (scipy is slow close to z = 1).
    """
    A, C = np.broadcast_arrays(np.asarray(A, dtype=float), np.asarray(C, dtype=float))
    lo = np.minimum(A, C)
    hi = np.maximum(A, C)
    w = lo / hi
    F = np.empty(w.shape)
    near = w >= 0.5
    F[near] = special.hyp2f1(p, 2 * p - 1, 2 * p, 1 - w[near])
    far = ~near
    if np.any(far):
        if abs(p - round(p)) < 1e-6:
            F[far] = special.hyp2f1(p, 2 * p - 1, 2 * p, 1 - w[far])
        else:
            wf = w[far]
            c1, c2 = _connection(p)
            F[far] = c1 * (1 - wf) ** (1 - 2 * p) + c2 * wf ** (1 - p) * special.hyp2f1(p, 1, 2 - p, wf)
    return hi ** (1 - 2 * p) / (2 * p - 1) * F


def _beta_antider(x, p):
    """Antiderivative of x^(-p) (1 - x)^(-p) on (0, 1/2]."""
    return x ** (1 - p) / (1 - p) * special.hyp2f1(1 - p, p, 2 - p, x)


@lru_cache(maxsize=64)
def _antider_half(p):
    return float(_beta_antider(0.5, p))


def _tail_from(x, p):
    """int_x^(1/2) t^(-p) (1 - t)^(-p) dt for 0 < x <= 1/2."""
    return _antider_half(p) - _beta_antider(x, p)


def _segment(a, c, d, p):
    """int_0^d (a + s)^(-p) (c + d - s)^(-p) ds."""
    a, c, d = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, c, d)))
    out = np.zeros(a.shape)
    L = a + c + d
    x1 = a / L
    x2 = 1 - c / L
    short = d <= 0.5 * np.minimum(a, c)
    if np.any(short):
        # smooth integrand: Gauss-Legendre is accurate and avoids cancellation
        xg, wg = _gl(20)
        aa, cc, dd = a[short], c[short], d[short]
        s = 0.5 * dd[:, None] * (xg + 1)
        vals = (aa[:, None] + s) ** (-p) * (cc[:, None] + dd[:, None] - s) ** (-p)
        out[short] = 0.5 * dd * (vals @ wg)
    rest = ~short
    if np.any(rest):
        a_, c_, L_ = a[rest], c[rest], L[rest]
        x1_, x2_ = x1[rest], x2[rest]
        val = np.empty(a_.shape)
        mid = (x1_ <= 0.5) & (x2_ >= 0.5)
        left = x2_ < 0.5
        right = x1_ > 0.5
        val[mid] = _tail_from(x1_[mid], p) + _tail_from(c_[mid] / L_[mid], p)
        val[left] = _beta_antider(x2_[left], p) - _beta_antider(x1_[left], p)
        # mirror t -> 1 - t for the right half
        val[right] = _tail_from(c_[right] / L_[right], p) - _tail_from(1 - x1_[right], p)
        out[rest] = L_ ** (1 - 2 * p) * val
    return out


def kink_integral(a, c, d, p):
    """Closed-form J(a, c, d; p), vectorized over a, c, d.

    The hypergeometric representation degenerates at integer p; use
    :func:`kink_quad` there.
    """
    if not p > 1 or abs(p - round(p)) < 1e-9:
        raise DomainError(f"closed form needs non-integer p > 1, got {p}")
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    d = np.abs(np.asarray(d, dtype=float))
    val = _half_line(a, c + d, p) + _half_line(a + d, c, p) + _segment(a, c, d, p)
    return val if np.ndim(val) else float(val)


def kink_bound(a, c, d, p):
    """Rigorous upper bound for J(a, c, d; p).

    Minimum of three elementary bounds: freezing the far factor at its
    smallest value, 2/(p-1) k1^(1-p) k3^(-p); splitting at the midpoint of
    the kinks; and 4 2^p/(p-1) k1^(1-p) (k3 + |d|)^(-p).  Here k1 = min(a, c)
    and k3 = max(a, c).
    """
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    d = np.abs(np.asarray(d, dtype=float))
    k1 = np.minimum(a, c)
    k3 = np.maximum(a, c)
    q = 2 / (p - 1)
    frozen = q * k1 ** (1 - p) * k3 ** (-p)
    split = q * (a ** (1 - p) * (c + d / 2) ** (-p) + c ** (1 - p) * (a + d / 2) ** (-p))
    swapped = 2 * q * 2**p * k1 ** (1 - p) / (k3 + d) ** p
    return np.minimum(np.minimum(frozen, split), swapped)


def kink_bound_static(a, c, p):
    """The d-independent part of :func:`kink_bound`: 2/(p-1) k1^(1-p) k3^(-p)."""
    k1 = np.minimum(a, c)
    k3 = np.maximum(a, c)
    return 2 / (p - 1) * k1 ** (1 - p) * k3 ** (-p)


def _series_tail(e1, e2, X, p, terms=40):
    """int_X^inf (e1 + s)^(-p) (e2 + s)^(-p) ds by expansion in 1/s (X > 2 max|e|)."""
    k = np.arange(terms)
    # binomial(-p, k) by recursion (scipy returns nan for negative integers)
    binom = np.cumprod(np.concatenate(([1.0], (-p - k[:-1]) / (k[:-1] + 1))))
    b1 = binom * float(e1) ** k
    b2 = binom * float(e2) ** k
    coef = np.convolve(b1, b2)[:terms]
    return float(np.sum(coef * X ** (1 - 2 * p - k) / (2 * p + k - 1)))


def _quad(f, lo, hi, rtol, points=None):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=rtol,
                                      limit=400, points=points)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"quadrature did not converge on [{lo}, {hi}]: {exc}")
    return val


def _geometric_points(kink, far, scale):
    """Break points between ``kink`` and ``far`` at kink +- scale * 4^j."""
    span = abs(far - kink)
    sign = 1.0 if far > kink else -1.0
    pts = []
    h = scale
    while h < span:
        pts.append(kink + sign * h)
        h *= 4
    return pts


def _graded_quad(f, lo, hi, scale_lo, scale_hi, rtol):
    """quad on [lo, hi] with break points graded towards both ends."""
    mid = 0.5 * (lo + hi)
    pts = _geometric_points(lo, mid, scale_lo) + [mid] + _geometric_points(hi, mid, scale_hi)
    pts = sorted(x for x in pts if lo < x < hi)
    total = 0.0
    edges = [lo] + pts + [hi]
    for e0, e1 in zip(edges[:-1], edges[1:]):
        total += _quad(f, e0, e1, rtol)
    return total


def kink_quad(a: float, c: float, d: float, p: float, rtol: float = 1e-10) -> float:
    """J(a, c, d; p) by adaptive quadrature split at the kinks s = 0 and s = d."""
    d = abs(float(d))

    def f(s):
        return (a + abs(s)) ** (-p) * (c + abs(d - s)) ** (-p)

    X = 4.0 * max(a, c, d, 1.0)
    inner = _graded_quad(f, -X, 0.0, X, a, rtol)
    if d > 0:
        inner += _graded_quad(f, 0.0, d, a, c, rtol)
    inner += _graded_quad(f, d, d + X, c, X, rtol)
    # s < -X: (a + u)(c + d + u) with u = -s; s > d + X: (a + d + v)(c + v)
    tails = _series_tail(a, c + d, X, p) + _series_tail(a + d, c, X, p)
    return inner + tails


def _graded_points(kink, far, scale, ratio):
    """Points between a kink and the far end of an interval, spaced geometrically
    from ``scale`` (the kink width) outwards."""
    span = abs(far - kink)
    if scale is None or scale >= span:
        return []
    sign = 1.0 if far > kink else -1.0
    out = []
    h = scale
    while h < span:
        out.append(kink + sign * h)
        h *= ratio
    return out


def panel_integral(f, intervals, tail=None, nodes: int = 24, ratio: float = 4.0) -> float:
    """Composite Gauss-Legendre quadrature refined geometrically towards kinks.

    ``intervals`` is a list of ``(lo, hi, scale_lo, scale_hi)``; a scale is the
    width of a kink at that end (``None`` for a smooth end).  Panel edges are
    placed at distances scale * ratio^j from each kink.  ``tail = (X, q)``
    adds int_X^inf f for integrands decaying like s^(-q), via the change of
    variable s = X u^(-1/(q-1)) on (0, 1].  Doubling ``nodes`` and taking the
    square root of ``ratio`` is the refinement used by the lemma checks.
    """
    xg, wg = _gl(nodes)
    total = 0.0
    for lo, hi, s_lo, s_hi in intervals:
        if hi <= lo:
            continue
        mid = 0.5 * (lo + hi)
        pts = _graded_points(lo, mid, s_lo, ratio) + [mid] + _graded_points(hi, mid, s_hi, ratio)
        edges = np.unique(np.clip([lo] + pts + [hi], lo, hi))
        e0, e1 = edges[:-1], edges[1:]
        half = 0.5 * (e1 - e0)
        s = half[:, None] * (xg + 1) + e0[:, None]
        total += float(np.sum(half * (f(s) @ wg)))
    if tail is not None:
        X, q = tail
        if not X > 0 or q <= 1:
            raise QuadratureError("tail needs a positive start and decay power > 1")
        # graded towards u = 0 (s -> infinity) and u = 1 (s = X)
        edges = np.unique(np.concatenate(([0.0, 1.0], ratio ** -np.arange(1, 40, dtype=float))))
        e0, e1 = edges[:-1], edges[1:]
        half = 0.5 * (e1 - e0)
        u = half[:, None] * (xg + 1) + e0[:, None]
        s = X * u ** (-1 / (q - 1))
        jac = X / (q - 1) * u ** (-q / (q - 1))
        total += float(np.sum(half * ((f(s) * jac) @ wg)))
    if not np.isfinite(total):
        raise QuadratureError("non-finite quadrature result")
    return total
