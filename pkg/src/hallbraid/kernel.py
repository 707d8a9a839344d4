"""Weighted bilinear kernel: weights, resonance function, lattice partition and sums.

For a parent mode (m, n) and frequency tau the kernel sum is

    K(m, n, tau) = sum_{(m', n')} m^2 rho_{m,n} w(tau; b') / (n^4 + (tau - l)^2)
                   * J(n'^2, (n - n')^2, tau - l' - l''; 2b) / (rho' rho'')

with rho = (|n| + |m|)^(2s), w(tau; b) = (n^2 + |tau - l|)^(2b), l = gamma m^3/n^2,
primes denoting (m', n') and (m - m', n - n'), and J the kink integral of
:mod:`hallbraid.quadrature` (the inner tau_1 integral in closed form).
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, PoleError
from .quadrature import kink_bound, kink_bound_static, kink_integral, kink_quad
from .spectral import GridSpec, ModelParams, dispersion_symbol

LABELS = ("B0", "B1", "S_c", "T_c", "S1capT", "S0capT")


@dataclass(frozen=True)
class WeightSpec:
    s: float
    b: float
    bprime: float
    override: bool = False

    def __post_init__(self):
        if self.override:
            if not self.b > 0.5:
                raise ConfigError("b must exceed 1/2 even with override")
            return
        problems = []
        if not 0.5 < self.b < 2 / 3:
            problems.append(f"b={self.b} not in (1/2, 2/3)")
        if not self.b <= self.bprime <= min(2 * self.b - 0.5, 2 / 3) + 1e-15:
            problems.append(f"bprime={self.bprime} not in [b, min(2b - 1/2, 2/3)]")
        if not self.s > 2.5:
            problems.append(f"s={self.s} not > 5/2")
        if problems:
            raise ConfigError("; ".join(problems) + " (use override for exploratory scans)")


@dataclass(frozen=True)
class PartitionLabel:
    label: str
    eta: float
    zeta: float


def weight(m, n, tau, spec: WeightSpec, params: ModelParams, which: str = "b") -> float:
    """rho_{m,n} * (n^2 + |tau - l_{m,n}|)^(2 b) with b or bprime."""
    if n == 0:
        raise DomainError("weight undefined for n = 0")
    b = {"b": spec.b, "bprime": spec.bprime}[which]
    l = dispersion_symbol(m, n, params)
    return (abs(n) + abs(m)) ** (2 * spec.s) * (n * n + abs(tau - l)) ** (2 * b)


def weight_array(grid: GridSpec, tau: np.ndarray, spec: WeightSpec, params: ModelParams,
                 which: str = "b") -> np.ndarray:
    """W_{m,n}(tau) on the stored lattice, shape (len(tau), nx, ny)."""
    b = {"b": spec.b, "bprime": spec.bprime}[which]
    m = grid.m.astype(float)[:, None]
    n = grid.n.astype(float)[None, :]
    rho = (np.abs(m) + n) ** (2 * spec.s)
    l = params.gamma * m**3 / n**2
    tau = np.asarray(tau, dtype=float)[:, None, None]
    return rho * (n**2 + np.abs(tau - l)) ** (2 * b)


def resonance_gap(m, n, mp, np_, p: ModelParams) -> float:
    """|l_{m,n} - l_{m',n'} - l_{m-m',n-n'}|."""
    if n == 0 or np_ == 0 or n == np_:
        raise DomainError(f"gap needs n, n', n - n' nonzero (n={n}, n'={np_})")
    l = dispersion_symbol
    return abs(l(m, n, p) - l(mp, np_, p) - l(m - mp, n - np_, p))


def resonance_f(eta: float, zeta: float) -> float:
    """f(eta, zeta) = (eta - zeta)^2 / (zeta^2 (1 - zeta)^2) (2 zeta - 1)(eta - g(zeta))."""
    if zeta in (0, 1, 0.5):
        raise PoleError(f"resonance function has a pole at zeta={zeta}")
    g = zeta * (2 - zeta) / (2 * zeta - 1)
    return (eta - zeta) ** 2 / (zeta**2 * (1 - zeta) ** 2) * (2 * zeta - 1) * (eta - g)


def resonance_f_expanded(eta, zeta):
    """Same function with (2 zeta - 1)(eta - g) multiplied out (regular at zeta = 1/2)."""
    eta = np.asarray(eta, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    return (eta - zeta) ** 2 / (zeta**2 * (1 - zeta) ** 2) * ((2 * zeta - 1) * eta - zeta * (2 - zeta))


def resonance_gap_via_f(m, n, mp, np_, p: ModelParams) -> float:
    """|gamma m^3 / n^2 * f(m'/m, n'/n)|; needs m != 0."""
    if m == 0:
        raise DomainError("the (eta, zeta) form needs m != 0")
    if n == 0 or np_ == 0 or n == np_:
        raise DomainError(f"gap needs n, n', n - n' nonzero (n={n}, n'={np_})")
    return float(abs(p.gamma * m**3 / n**2 * resonance_f_expanded(mp / m, np_ / n)))


def q_factor(m, n, mp, np_, spec: WeightSpec, p: ModelParams) -> float:
    gap = resonance_gap(m, n, mp, np_, p)
    return abs(n) ** (-4 * spec.b) * (n * n + gap) ** (2 * spec.bprime - 2)


def k_thresholds(n, spec: WeightSpec) -> tuple[float, float]:
    """(k(n), k1(n)) of the T and S set definitions."""
    k = min(0.1, abs(n) ** (-2 / 3 + 2 * spec.bprime - 2 * spec.b))
    return k, 1 / (10 * abs(n))


def classify_codes(m, n, mp, np_, spec: WeightSpec) -> np.ndarray:
    """Vectorized partition codes (indices into LABELS) for valid tuples."""
    mp = np.asarray(mp, dtype=float)
    np_ = np.asarray(np_, dtype=float)
    k, k1 = k_thresholds(n, spec)
    eta = mp / m
    zeta = np_ / n
    in_T = (np.abs(eta) <= 1.5) & (
        (np.abs((2 * zeta - 1) * eta - zeta * (2 - zeta)) <= k) | (np.abs(eta - zeta) <= k)
    )
    in_S0 = np.abs(eta) <= k1
    in_S1 = np.abs(1 - eta) <= k1
    codes = np.select(
        [np_ == 2 * n, np.abs(mp) > 1.5 * abs(m), ~(in_S0 | in_S1), ~in_T, in_S1],
        [0, 1, 2, 3, 4],
        default=5,
    )
    return codes


def classify(m, n, mp, np_, spec: WeightSpec) -> PartitionLabel:
    """Partition label of (m', n') relative to (m, n) on the half lattice n'/n >= 1/2.

    Precedence: B0, B1, then S-complement, T-complement, S1 and T, S0 and T.
    """
    if m == 0 or n == 0:
        raise DomainError("classification needs m != 0 and n != 0")
    if np_ == 0 or np_ == n or np_ / n < 0.5:
        raise DomainError(f"(m', n') = ({mp}, {np_}) outside the half lattice n'/n >= 1/2")
    code = int(classify_codes(m, n, mp, np_, spec))
    return PartitionLabel(LABELS[code], mp / m, np_ / n)


# --------------------------------------------------------------------------
# lattice sum


@dataclass(frozen=True)
class Truncation:
    mmax: int
    nmax: int

    def __post_init__(self):
        if self.mmax < 0 or self.nmax < 1:
            raise ConfigError("truncation needs mmax >= 0 and nmax >= 1")


@dataclass
class _Lattice:
    """tau-independent pieces of the summand for one parent mode."""

    m: int
    n: int
    a: np.ndarray
    c: np.ndarray
    lsum: np.ndarray
    ratio: np.ndarray  # rho / (rho' rho'')
    codes: np.ndarray
    mp: np.ndarray
    np_: np.ndarray
    order: np.ndarray  # decreasing tau-independent bound


def _lattice(m, n, trunc: Truncation, spec: WeightSpec, p: ModelParams) -> _Lattice:
    mp, np_ = np.meshgrid(np.arange(-trunc.mmax, trunc.mmax + 1),
                          np.arange(-trunc.nmax, trunc.nmax + 1), indexing="ij")
    mp = mp.ravel()
    np_ = np_.ravel()
    keep = (np_ != 0) & (np_ != n)
    mp, np_ = mp[keep], np_[keep]
    m2, n2 = m - mp, n - np_
    fm, fn = float(m), float(n)
    rho = (abs(fm) + abs(fn)) ** (2 * spec.s)
    ratio = rho / ((np.abs(np_) + np.abs(mp)) ** (2 * spec.s) * (np.abs(n2) + np.abs(m2)) ** (2 * spec.s))
    lsum = p.gamma * (mp.astype(float) ** 3 / np_.astype(float) ** 2 + m2.astype(float) ** 3 / n2.astype(float) ** 2)
    if m != 0:
        # label via the half-lattice representative of the mirror pair
        upper = np_ / n >= 0.5
        rep_m = np.where(upper, mp, m2)
        rep_n = np.where(upper, np_, n2)
        codes = classify_codes(m, n, rep_m, rep_n, spec)
    else:
        codes = np.full(mp.shape, -1)
    a = np_.astype(float) ** 2
    c = n2.astype(float) ** 2
    static = ratio * kink_bound_static(a, c, 2 * spec.b)
    order = np.argsort(-static, kind="stable")
    return _Lattice(m, n, a, c, lsum, ratio, codes, mp, np_, order)


def _prefactor(m, n, tau, spec, p):
    l = dispersion_symbol(m, n, p)
    dt = tau - l
    return m * m * (n * n + abs(dt)) ** (2 * spec.bprime) / (n**4 + dt * dt)


@dataclass
class KernelValue:
    total: float
    breakdown: dict
    evaluated: int
    pruned_bound: float


def _evaluate(lat: _Lattice, tau: float, spec: WeightSpec, p: ModelParams,
              prune_rtol: float, method: str = "closed") -> KernelValue:
    breakdown = {lab: 0.0 for lab in LABELS}
    if lat.m == 0 or lat.a.size == 0:
        return KernelValue(0.0, breakdown, 0, 0.0)
    pw = 2 * spec.b
    pref = _prefactor(lat.m, lat.n, tau, spec, p)
    d = tau - lat.lsum
    if method == "quad":
        J = np.array([kink_quad(a, c, dd, pw) for a, c, dd in zip(lat.a, lat.c, d)])
        terms = pref * lat.ratio * J
        pruned = 0.0
        done = terms.size
    else:
        # evaluate in decreasing order of the tau-independent bound until the
        # tau-dependent bounds of the remaining terms are negligible
        order = lat.order
        bound = pref * lat.ratio[order] * kink_bound(lat.a[order], lat.c[order], d[order], pw)
        tail = np.cumsum(bound[::-1])[::-1]
        terms = np.zeros(order.size)
        done = 0
        acc = 0.0
        chunk = 64
        while done < order.size:
            sel = order[done:done + chunk]
            vals = pref * lat.ratio[sel] * kink_integral(lat.a[sel], lat.c[sel], d[sel], pw)
            terms[done:done + sel.size] = vals
            acc += float(vals.sum())
            done += sel.size
            chunk *= 2
            if done < order.size and tail[done] <= prune_rtol * acc:
                break
        pruned = float(tail[done]) if done < order.size else 0.0
        full = np.zeros(order.size)
        full[order[:done]] = terms[:done]
        terms = full
    # fixed-order reduction per label
    codes = lat.codes
    for k, lab in enumerate(LABELS):
        breakdown[lab] = float(np.sum(terms[codes == k]))
    evaluated = done if method != "quad" else terms.size
    total = float(sum(breakdown.values()))
    return KernelValue(total, breakdown, int(evaluated), pruned)


def kernel_sum(m, n, tau, trunc: Truncation, spec: WeightSpec, p: ModelParams,
               prune_rtol: float = 1e-10, method: str = "closed") -> tuple[float, dict]:
    """Truncated kernel sum over |m'| <= mmax, 1 <= |n'| <= nmax, n' != n.

    Every term is attributed to the partition label of the member of its
    mirror pair (m', n') <-> (m - m', n - n') lying on n'/n >= 1/2.  With the
    default closed-form route, terms whose rigorous upper bounds add up to
    less than ``prune_rtol`` of the evaluated sum are skipped.  ``method =
    "quad"`` evaluates every inner integral by adaptive quadrature instead.
    """
    if n == 0:
        raise DomainError("kernel sum needs n != 0")
    lat = _lattice(m, n, trunc, spec, p)
    kv = _evaluate(lat, float(tau), spec, p, prune_rtol, method)
    return kv.total, kv.breakdown


def kernel_value(m, n, tau, trunc, spec, p, prune_rtol=1e-10) -> KernelValue:
    lat = _lattice(m, n, trunc, spec, p)
    return _evaluate(lat, float(tau), spec, p, prune_rtol)


def tau_probes(lat: _Lattice, p: ModelParams, n_resonant: int = 8) -> np.ndarray:
    """tau = l, l +- n^2 2^j (j = -2..12), plus resonance values l' + l'' of the
    lattice terms with the largest rho ratio."""
    m, n = lat.m, lat.n
    l = dispersion_symbol(m, n, p)
    offs = float(n * n) * 2.0 ** np.arange(-2, 13)
    probes = [l] + list(l + offs) + list(l - offs)
    if n_resonant and lat.ratio.size:
        top = np.argsort(-lat.ratio, kind="stable")
        seen = []
        for i in top:
            v = float(lat.lsum[i])
            if not any(abs(v - w) <= 1e-12 * max(1.0, abs(w)) for w in seen):
                seen.append(v)
            if len(seen) >= n_resonant:
                break
        probes += seen
    return np.array(probes)


@dataclass
class KernelReport:
    """Scan results; ``rows`` holds (rung, m, n, tau, total, breakdown dict)."""

    ladder: list
    spec: WeightSpec
    params: ModelParams
    rows: list = field(default_factory=list)
    rung_sup: list = field(default_factory=list)
    rung_argsup: list = field(default_factory=list)
    max_pruned_fraction: float = 0.0

    @property
    def sup(self) -> float:
        return self.rung_sup[-1]

    @property
    def plateau(self) -> float:
        """Relative change of the supremum between the last two rungs."""
        if len(self.rung_sup) < 2:
            return float("nan")
        a, b = self.rung_sup[-2], self.rung_sup[-1]
        return abs(b - a) / abs(b) if b else 0.0

    def tau_grid(self) -> list:
        return sorted({r[3] for r in self.rows})

    def partition_summary(self, rung=None) -> dict:
        """Per-label totals and maxima over the rows of one rung (default last)."""
        rung = self.ladder[-1] if rung is None else rung
        out = {lab: {"total": 0.0, "max": 0.0} for lab in LABELS}
        for r in self.rows:
            if r[0] != rung:
                continue
            for lab, v in r[5].items():
                out[lab]["total"] += v
                out[lab]["max"] = max(out[lab]["max"], v)
        return out


def scan_workers() -> int:
    try:
        return max(1, int(os.environ.get("HALLBRAID_THREADS", "1")))
    except ValueError:
        return 1


def _scan_mode(args):
    m, n, trunc, spec, p, prune_rtol, n_resonant = args
    lat = _lattice(m, n, trunc, spec, p)
    out = []
    for tau in tau_probes(lat, p, n_resonant):
        kv = _evaluate(lat, float(tau), spec, p, prune_rtol)
        frac = kv.pruned_bound / kv.total if kv.total else 0.0
        out.append((m, n, float(tau), kv.total, kv.breakdown, frac))
    return out


def sup_scan(m_values, n_values, ladder, spec: WeightSpec, p: ModelParams,
             prune_rtol: float = 1e-6, workers: int | None = None,
             n_resonant: int = 8) -> KernelReport:
    """Running supremum of the kernel sum over parents and tau probes per rung.

    Only m >= 1, n >= 1 are needed: the sum is unchanged under n -> -n and
    under (m, tau) -> (-m, -tau), and vanishes for m = 0.  Terms whose
    rigorous bounds sum to less than ``prune_rtol`` of the evaluated sum are
    skipped; the largest such fraction is ``report.max_pruned_fraction``.
    """
    workers = scan_workers() if workers is None else workers
    modes = [(m, n) for n in n_values for m in m_values if m >= 1 and n >= 1]
    report = KernelReport(list(ladder), spec, p)
    for rung in ladder:
        trunc = rung if isinstance(rung, Truncation) else Truncation(int(rung), int(rung))
        jobs = [(m, n, trunc, spec, p, prune_rtol, n_resonant) for m, n in modes]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as ex:
                results = list(ex.map(_scan_mode, jobs, chunksize=4))
        else:
            results = [_scan_mode(j) for j in jobs]
        best, arg = -np.inf, None
        for res in results:  # fixed (n, m, tau) order
            for m, n, tau, total, breakdown, frac in res:
                if not np.isfinite(total):
                    raise FloatingPointError(f"non-finite kernel sum at ({m}, {n}, {tau})")
                report.rows.append((rung, m, n, tau, total, breakdown))
                report.max_pruned_fraction = max(report.max_pruned_fraction, frac)
                if total > best:
                    best, arg = total, (m, n, tau)
        report.rung_sup.append(float(best))
        report.rung_argsup.append(arg)
    return report


def resonance_floor(mmax: int, nmax: int, spec: WeightSpec, p: ModelParams) -> float:
    """Smallest gap * n^2 / (k^3 |m|^3) over T-complement tuples in a box."""
    best = np.inf
    for n in range(1, nmax + 1):
        k, _ = k_thresholds(n, spec)
        for m in range(1, mmax + 1):
            mp, np_ = np.meshgrid(np.arange(-mmax, mmax + 1), np.arange(-nmax, nmax + 1), indexing="ij")
            mp, np_ = mp.ravel(), np_.ravel()
            ok = (np_ != 0) & (np_ != n) & (np_ / n >= 0.5)
            mp, np_ = mp[ok], np_[ok]
            codes = classify_codes(m, n, mp, np_, spec)
            sel = codes == LABELS.index("T_c")
            if not np.any(sel):
                continue
            f = resonance_f_expanded(mp[sel] / m, np_[sel] / n)
            best = min(best, float(np.min(np.abs(p.gamma * f) / k**3)))
    return best
