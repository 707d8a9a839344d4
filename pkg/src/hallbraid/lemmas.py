"""Numerical spot checks of three elementary inequalities used by the kernel bound.

Each check evaluates LHS/RHS over a parameter grid and reports the maximum;
the integrals are computed by graded Gauss-Legendre panels split at the
kinks (:func:`hallbraid.quadrature.panel_integral`), so the quadrature can be
refined and the maxima compared.

* pointwise:  1 / ((k3 + |t - k2|)^(2(1-b')) (k3 + |t - k4|)^(2b))
              <= 1 / (k3^(2b) (k3 + |k2 - k4|)^(2(1-b'))), and the same with
              the exponents swapped; equality holds at t = k4 (resp. t = k2).
* two kinks:  int (k1 + |t - k2|)^(-2b) (k3 + |t - k4|)^(-2b) dt
              <~ 1 / (k1^(2b-1) (k3 + |k2 - k4|)^(2b)),   k3 >= k1 >= 1.
* cubic:      int (1 + |tau - x^3 - (xi - x)^3|)^(-2b) dx
              <~ 1 / (sqrt|xi| (1 + |4 tau - xi^3|)^(1/2)).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, QuadratureError
from .quadrature import kink_integral, panel_integral


@dataclass
class LemmaSection:
    name: str
    columns: tuple
    rows: list = field(default_factory=list)

    @property
    def max_ratio(self) -> float:
        return max(r[-1] for r in self.rows)


@dataclass
class LemmaReport:
    sections: list
    refined_max: dict
    tolerance: float = 0.02

    def relative_changes(self) -> dict:
        return {s.name: abs(self.refined_max[s.name] - s.max_ratio) / abs(s.max_ratio)
                for s in self.sections}

    @property
    def stable(self) -> bool:
        return all(np.isfinite(s.max_ratio) for s in self.sections) and all(
            v <= self.tolerance for v in self.relative_changes().values()
        )


def _check_b(b, bprime):
    if not 0.5 < b < 1:
        raise ConfigError(f"b={b} must lie in (1/2, 1)")
    if not 1 - b <= bprime < 1:
        raise ConfigError(f"bprime={bprime} must lie in [1 - b, 1)")


# ---------------------------------------------------------------------------
# pointwise bound


def pointwise_ratio(t, k2, k3, k4, b, bprime, swapped=False):
    """LHS/RHS of the pointwise bound (``swapped`` exchanges the two exponents)."""
    e1, e2 = (2 * b, 2 * (1 - bprime)) if swapped else (2 * (1 - bprime), 2 * b)
    lhs = 1.0 / ((k3 + np.abs(t - k2)) ** e1 * (k3 + np.abs(t - k4)) ** e2)
    rhs = 1.0 / (k3 ** (2 * b) * (k3 + np.abs(k2 - k4)) ** (2 * (1 - bprime)))
    return lhs / rhs


def check_pointwise(b, bprime, density: int = 8) -> LemmaSection:
    _check_b(b, bprime)
    sec = LemmaSection("pointwise", ("statement", "k2", "k3", "k4", "tau", "ratio"))
    k3s = np.logspace(0, 3, density)
    gaps = np.concatenate(([0.0], np.logspace(-1, 4, density)))
    for k3 in k3s:
        for gap in gaps:
            for sign in (1.0, -1.0):
                k2, k4 = 0.0, sign * gap
                lo, hi = min(k2, k4), max(k2, k4)
                span = max(hi - lo, k3)
                taus = np.unique(np.concatenate((
                    np.linspace(lo - 4 * span, hi + 4 * span, 8 * density + 1), [k2, k4])))
                for stmt, swapped in ((1, False), (2, True)):
                    r = pointwise_ratio(taus, k2, k3, k4, b, bprime, swapped)
                    i = int(np.argmax(r))
                    sec.rows.append((stmt, k2, k3, k4, float(taus[i]), float(r[i])))
    # the equality rows: t = k4 for the first statement, t = k2 for the second
    for k3, gap in ((1.0, 5.0), (10.0, 123.0)):
        sec.rows.append((1, 0.0, k3, gap, gap, float(pointwise_ratio(gap, 0.0, k3, gap, b, bprime))))
        sec.rows.append((2, 0.0, k3, gap, 0.0, float(pointwise_ratio(0.0, 0.0, k3, gap, b, bprime, True))))
    return sec


def equality_ratio(b, bprime, k2=0.0, k3=3.0, k4=7.5) -> float:
    """LHS/RHS of the first pointwise statement at t = k4 (exactly 1)."""
    return float(pointwise_ratio(k4, k2, k3, k4, b, bprime))


# ---------------------------------------------------------------------------
# two-kink integral


def two_kink_integral(k1, k3, d, b, nodes=24, ratio=4.0) -> float:
    """int (k1 + |t|)^(-2b) (k3 + |t - d|)^(-2b) dt by graded panels (d >= 0)."""
    p = 2 * b
    d = abs(d)

    def f(t):
        return (k1 + np.abs(t)) ** (-p) * (k3 + np.abs(t - d)) ** (-p)

    def f_left(u):
        return f(-u)

    X = 2 * max(k1, k3, d, 1.0)
    # a kink's influence reaches the other break point when d is small
    w0 = min(k1, k3 + d)
    wd = min(k3, k1 + d)
    left = panel_integral(f_left, [(0.0, X, w0, None)], tail=(X, 2 * p), nodes=nodes, ratio=ratio)
    mid = panel_integral(f, [(0.0, d, w0, wd)], nodes=nodes, ratio=ratio) if d > 0 else 0.0
    right = panel_integral(lambda u: f(d + u), [(0.0, X, wd, None)], tail=(X, 2 * p),
                           nodes=nodes, ratio=ratio)
    return left + mid + right


def two_kink_ratio(k1, k3, d, b, **quad) -> float:
    lhs = two_kink_integral(k1, k3, d, b, **quad)
    return lhs * k1 ** (2 * b - 1) * (k3 + abs(d)) ** (2 * b)


def check_two_kink(b, density: int = 6, nodes=24, ratio=4.0) -> LemmaSection:
    if not 0.5 < b < 1:
        raise ConfigError(f"b={b} must lie in (1/2, 1)")
    sec = LemmaSection("two_kink", ("k1", "k3", "gap", "lhs", "closed_form", "ratio"))
    ks = np.logspace(0, 3, density)
    gaps = np.concatenate(([0.0], np.logspace(-1, 5, density)))
    for k1 in ks:
        for k3 in ks[ks >= k1]:
            for gap in gaps:
                lhs = two_kink_integral(k1, k3, gap, b, nodes=nodes, ratio=ratio)
                cf = kink_integral(k1, k3, gap, 2 * b)
                r = lhs * k1 ** (2 * b - 1) * (k3 + gap) ** (2 * b)
                sec.rows.append((float(k1), float(k3), float(gap), lhs, cf, r))
    return sec


# ---------------------------------------------------------------------------
# cubic phase


def cubic_integral(xi, tau, b, nodes=24, ratio=4.0) -> float:
    """int (1 + |tau - x^3 - (xi - x)^3|)^(-2b) dx.

    With y = x - xi/2 the phase is c - 3 xi y^2, c = (4 tau - xi^3)/4, so the
    integrand is even in y with kinks at y = +-sqrt(c / (3 xi)) and decays
    like |y|^(-4b).
    """
    if xi == 0:
        raise ConfigError("xi = 0 is excluded")
    p = 2 * b
    c = (4 * tau - xi**3) / 4

    def g(y):
        return (1 + np.abs(c - 3 * xi * y * y)) ** (-p)

    base = np.sqrt(1.0 / (3 * abs(xi)))
    if c / xi > 0:
        ys = np.sqrt(c / (3 * xi))
        width = min(ys, 1.0 / (6 * abs(xi) * ys))
        X = 2 * ys + base
        intervals = [(0.0, ys, None, width), (ys, X, width, None)]
    else:
        X = np.sqrt((abs(c) + 1) / (3 * abs(xi))) * 2
        intervals = [(0.0, X, None, None)]
    half = panel_integral(g, intervals, tail=(X, 2 * p), nodes=nodes, ratio=ratio)
    return 2 * half


def cubic_ratio(xi, tau, b, **quad) -> float:
    lhs = cubic_integral(xi, tau, b, **quad)
    return lhs * np.sqrt(abs(xi)) * np.sqrt(1 + abs(4 * tau - xi**3))


def check_cubic(b, density: int = 6, nodes=24, ratio=4.0) -> LemmaSection:
    if not 0.5 < b < 1:
        raise ConfigError(f"b={b} must lie in (1/2, 1)")
    sec = LemmaSection("cubic", ("xi", "tau", "lhs", "ratio"))
    mags = np.logspace(-1, 1, density)
    xis = np.concatenate((-mags[::-1], mags))
    kappas = np.concatenate((-np.logspace(-2, 4, density)[::-1], [0.0], np.logspace(-2, 4, density)))
    pts = [(xi, (kap + xi**3) / 4) for xi in xis for kap in kappas]
    pts.append((1.0, 0.25))
    for xi, tau in pts:
        lhs = cubic_integral(xi, tau, b, nodes=nodes, ratio=ratio)
        r = lhs * np.sqrt(abs(xi)) * np.sqrt(1 + abs(4 * tau - xi**3))
        if not np.isfinite(r):
            raise QuadratureError(f"non-finite ratio at xi={xi}, tau={tau}")
        sec.rows.append((float(xi), float(tau), lhs, float(r)))
    return sec


def check_lemmas(b=0.55, bprime=0.6, density: int = 6, tolerance: float = 0.02) -> LemmaReport:
    """Run the three checks at base and refined quadrature (nodes doubled,
    panel ratio square-rooted) and compare the maxima."""
    _check_b(b, bprime)
    base = dict(nodes=16, ratio=4.0)
    fine = dict(nodes=32, ratio=2.0)
    sections = [
        check_pointwise(b, bprime, density),
        check_two_kink(b, density, **base),
        check_cubic(b, density, **base),
    ]
    refined = {
        "pointwise": check_pointwise(b, bprime, density).max_ratio,
        "two_kink": check_two_kink(b, density, **fine).max_ratio,
        "cubic": check_cubic(b, density, **fine).max_ratio,
    }
    return LemmaReport(sections, refined, tolerance)
