"""Energy ledger, PDE residual and the weighted space and space-time norms.

Energies are computed for the physical field u = exp(beta t) * sum(...), not
for the renormalized coefficients stored in a :class:`SpectralField`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft
from scipy.integrate import cumulative_trapezoid

from .errors import ConfigError, ResolutionError, SpacingError
from .spectral import (
    GridSpec,
    ModelParams,
    PhysicalField,
    SpectralField,
    amplitudes_to_grid,
    coeffs_to_amplitudes,
    fft_workers,
    forward_transform,
    grid_to_amplitudes,
    pad_coeffs,
    unpad_coeffs,
)

_AREA = 4 * np.pi**2


@dataclass
class EnergyLedger:
    times: list
    energy: list
    dissipation_cum: list
    balance_residual: list
    gronwall_margin: list

    def rows(self):
        return zip(self.times, self.energy, self.dissipation_cum,
                   self.balance_residual, self.gronwall_margin)


def l2_energy(f: PhysicalField) -> float:
    """||u||^2 over [0, 2pi] x [0, pi] via Parseval."""
    return spectral_energy(forward_transform(f))


def dissipation(f: PhysicalField) -> float:
    """||u_y||^2 via spectral differentiation and Parseval."""
    return spectral_dissipation(forward_transform(f))


def spectral_energy(c: SpectralField, params: ModelParams | None = None) -> float:
    """||u||^2 of the field described by ``c`` (with exp(2 beta t) if params given)."""
    e = _AREA * float(np.sum(np.abs(c.coeffs) ** 2))
    return e * np.exp(2 * params.beta * c.time) if params is not None else e


def spectral_dissipation(c: SpectralField, params: ModelParams | None = None) -> float:
    n2 = c.grid.n.astype(float) ** 2
    d = _AREA * float(np.sum(n2[None, :] * np.abs(c.coeffs) ** 2))
    return d * np.exp(2 * params.beta * c.time) if params is not None else d


def energy_balance(traj) -> EnergyLedger:
    """Ledger of the energy identity along a trajectory (trapezoid in time).

    balance_residual = |E/2 + alpha int D - E0/2 - beta int E|
    gronwall_margin  = (E/2) exp(-2 (beta - alpha) t) / (E0/2) - 1
    """
    p = traj.params
    snaps = traj.snapshots
    if len(snaps) < 2:
        raise ConfigError("energy_balance needs at least two snapshots")
    t = np.array([s.time for s in snaps])
    E = np.array([spectral_energy(s, p) for s in snaps])
    D = np.array([spectral_dissipation(s, p) for s in snaps])
    Dcum = cumulative_trapezoid(D, t, initial=0.0)
    Ecum = cumulative_trapezoid(E, t, initial=0.0)
    resid = np.abs(0.5 * E + p.alpha * Dcum - 0.5 * E[0] - p.beta * Ecum)
    if E[0] > 0:
        margin = E * np.exp(-2 * (p.beta - p.alpha) * (t - t[0])) / E[0] - 1
    else:
        margin = np.where(E > 0, np.inf, 0.0)
    return EnergyLedger(list(t), list(E), list(Dcum), list(resid), list(margin))


# --------------------------------------------------------------------------
# PDE residual


def _square_amplitudes(a: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Cosine amplitudes (n = 0..ny) of f^2 for f with amplitudes ``a``."""
    a = np.array(a)
    a[grid.nyquist_row()] = 0
    padded = pad_coeffs(a, grid.padded_nx, grid.padded_ny + 1)
    f = amplitudes_to_grid(padded).real
    sq = grid_to_amplitudes(f * f)
    return unpad_coeffs(sq, grid.nx, grid.ny + 1)


def _amp_norm(a: np.ndarray) -> float:
    # int cos^2(ny) dy = pi/2 for n >= 1 and pi for n = 0
    w = np.full(a.shape[1], np.pi**2)
    w[0] = 2 * np.pi**2
    return float(np.sqrt(np.sum(w[None, :] * np.abs(a) ** 2)))


def _residual_series(amps: list, times: np.ndarray, grid: GridSpec, p: ModelParams) -> list:
    if len(amps) < 3:
        raise ConfigError("pde_residual needs at least three snapshots")
    dts = np.diff(times)
    dt = dts.mean()
    if np.max(np.abs(dts - dt)) > 1e-9 * abs(dt):
        raise SpacingError("snapshot times are not uniformly spaced")
    m = grid.m.astype(float)[:, None]
    n = np.arange(grid.ny + 1, dtype=float)[None, :]
    out = []
    for k in range(1, len(amps) - 1):
        a = amps[k]
        terms = [
            -n**2 * (amps[k + 1] - amps[k - 1]) / (2 * dt),     # u_yyt
            -p.gamma * (1j * m) ** 3 * a,                      # -g u_xxx
            -p.alpha * n**4 * a,                               # -a u_yyyy
            p.beta * n**2 * a,                                 # -b u_yy
            (1j * m) * (-n**2) * _square_amplitudes(a, grid),  # (u^2)_xyy
        ]
        scale = sum(_amp_norm(x) for x in terms)
        r = _amp_norm(sum(terms))
        out.append(r / scale if scale > 0 else 0.0)
    return out


def pde_residual(traj, p: ModelParams) -> list:
    """Relative L^2 residual of the PDE at each interior snapshot.

    The time derivative is a centred difference, space derivatives are
    spectral.  Each value is normalized by the sum of the norms of the five
    individual terms, so it is a dimensionless consistency measure.
    """
    amps = [coeffs_to_amplitudes(s.coeffs) * np.exp(p.beta * s.time) for s in traj.snapshots]
    times = np.array([s.time for s in traj.snapshots])
    return _residual_series(amps, times, traj.snapshots[0].grid, p)


def pde_residual_fields(fields: list, p: ModelParams) -> list:
    """:func:`pde_residual` for physical samples (a nonzero y-mean is allowed)."""
    amps = [grid_to_amplitudes(f.values) for f in fields]
    times = np.array([f.time for f in fields])
    return _residual_series(amps, times, fields[0].grid, p)


# --------------------------------------------------------------------------
# norms


def hs0b_norm(c: SpectralField, s: float, b: float) -> float:
    """sqrt( sum |n|^(4b-2) (|n| + |m|)^(2s) |v|^2 ) over the lattice.

    The sum runs over n = +-1..+-ny; since v[m, -n] = v[m, n] this is twice
    the sum over the stored half.  b = 1/2 is accepted so the norm can be
    compared with a plain weighted Sobolev sum.
    """
    if s < 0 or b < 0.5:
        raise ConfigError(f"need s >= 0 and b >= 1/2, got s={s}, b={b}")
    m = np.abs(c.grid.m.astype(float))[:, None]
    n = c.grid.n.astype(float)[None, :]
    w = n ** (4 * b - 2) * (n + m) ** (2 * s)
    return float(np.sqrt(2 * np.sum(w * np.abs(c.coeffs) ** 2)))


@lru_cache(maxsize=None)
def _gauss_legendre(k: int):
    return np.polynomial.legendre.leggauss(k)


def _bump(r):
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


def _bump_cdf(r: np.ndarray, nodes: int = 80) -> np.ndarray:
    """Normalized running integral of the bump from -1 to r (r in [-1, 1])."""
    x, w = _gauss_legendre(nodes)
    r = np.clip(np.asarray(r, dtype=float), -1, 1)
    half = (r + 1) / 2
    pts = -1 + half[..., None] * (x + 1)
    part = half * np.sum(w * _bump(pts), axis=-1)
    total = np.sum(w * _bump(x))
    return part / total


@dataclass(frozen=True)
class CutoffSpec:
    """Smooth plateau: 1 on [-delta, delta], 0 outside (-2 delta, 2 delta).

    On delta <= |t| <= 2 delta the profile is one minus the normalized running
    integral of exp(-1/(1 - r^2)), which makes it C-infinity and monotone.
    """

    delta: float
    sample_count: int = 512

    def __post_init__(self):
        if not self.delta > 0:
            raise ConfigError("delta must be positive")
        if self.sample_count < 8:
            raise ConfigError("sample_count must be >= 8")

    def phi(self, t):
        a = np.abs(np.asarray(t, dtype=float)) / self.delta
        r = 2 * (a - 1) - 1
        out = 1 - _bump_cdf(r)
        out = np.where(a <= 1, 1.0, out)
        return np.where(a >= 2, 0.0, out)

    def times(self) -> np.ndarray:
        """Uniform samples covering [-2 delta, 2 delta) (phi vanishes at both ends)."""
        h = 4 * self.delta / self.sample_count
        return -2 * self.delta + h * np.arange(self.sample_count)


def tsb_norm(theta: np.ndarray, spec, cutoff: CutoffSpec, grid: GridSpec,
             params: ModelParams, pad: int = 32) -> float:
    """Space-time weighted norm of a coefficient history.

    ``theta`` has shape (cutoff.sample_count, nx, ny) with samples at
    ``cutoff.times()``; it must vanish outside (-2 delta, 2 delta).  The time
    Fourier transform F(tau) = int exp(-i t tau) theta dt is approximated by a
    zero-padded FFT, and the tau integral by a Riemann sum over the FFT grid.
    The weight has a kink at tau = l_{m,n}, so the sum converges only at first
    order in the tau spacing 2 pi / (pad * 4 delta); pad = 32 keeps that error
    near 1e-5 of the norm.
    Raises ResolutionError if the integrand has not decayed to 1e-12 of its
    peak near the edge of the resolved band.
    """
    from .kernel import weight_array

    theta = np.asarray(theta, dtype=complex)
    T = cutoff.sample_count
    if theta.shape != (T,) + grid.shape:
        raise ConfigError(f"theta shape {theta.shape} != {(T,) + grid.shape}")
    if not np.any(theta):
        return 0.0
    ts = cutoff.times()
    h = ts[1] - ts[0]
    L = pad * T
    F = scipy.fft.fft(theta, n=L, axis=0, workers=fft_workers())
    tau = 2 * np.pi * scipy.fft.fftfreq(L, h)
    F = F * h * np.exp(-1j * tau * ts[0])[:, None, None]
    dtau = 2 * np.pi / (L * h)
    W = weight_array(grid, tau, spec, params)
    integrand = W * np.abs(F) ** 2
    per_tau = integrand.sum(axis=(1, 2))
    peak = per_tau.max()
    edge = np.abs(tau) > 0.9 * np.abs(tau).max()
    if per_tau[edge].max() > 1e-12 * peak:
        raise ResolutionError(
            f"integrand at band edge is {per_tau[edge].max() / peak:.2e} of its peak; "
            "increase sample_count"
        )
    return float(np.sqrt(2 * per_tau.sum() * dtau))
