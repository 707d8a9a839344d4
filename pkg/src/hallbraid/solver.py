"""Windowed Picard iteration of the Duhamel form of the coefficient dynamics.

In coefficient space every mode obeys

    du/dt = lam u + exp(beta t) A(u),   lam = -alpha n^2 + i gamma m^3 / n^2,

whose mild form on a window [t0, t0 + delta] is iterated to a fixed point.
The memory integral uses a piecewise-linear interpolant of exp(beta s) A(s)
integrated exactly against exp(lam (t - s)) (first/second phi functions).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .errors import BackwardTimeError, ConfigError, ContractionFailure, StiffnessError
from .spectral import (
    GridSpec,
    ModelParams,
    PhysicalField,
    SpectralField,
    check_symmetry,
    enforce_symmetry,
    fft_workers,
    galerkin_project,
    linear_symbol,
    nonlinear_term,
)

MAX_HALVINGS = 20
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SolverConfig:
    window: float = 1e-2
    nodes_per_window: int = 9
    picard_tol: float = 1e-12
    picard_max_iter: int = 50
    adapt_window: bool = False

    def __post_init__(self):
        if not self.window > 0:
            raise ConfigError(f"window must be positive, got {self.window}")
        if int(self.nodes_per_window) != self.nodes_per_window or self.nodes_per_window < 2:
            raise ConfigError("nodes_per_window must be an integer >= 2")
        if not self.picard_tol > 0:
            raise ConfigError("picard_tol must be positive")
        if self.picard_max_iter < 1:
            raise ConfigError("picard_max_iter must be >= 1")


@dataclass
class PicardReport:
    iterations: int
    residual_history: list
    contraction_ratio: float
    converged: bool = True
    window: float = 0.0
    halvings: int = 0


@dataclass
class Trajectory:
    snapshots: list
    params: ModelParams
    config: SolverConfig
    contraction_log: list = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])

    @property
    def grid(self) -> GridSpec:
        return self.snapshots[0].grid

    def final(self) -> SpectralField:
        return self.snapshots[-1]


def phi_functions(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """phi1(z) = (e^z - 1)/z and phi2(z) = (e^z - 1 - z)/z^2, stable near 0."""
    z = np.asarray(z, dtype=complex)
    phi1 = np.empty_like(z)
    phi2 = np.empty_like(z)
    small = np.abs(z) < 1.0
    zs = z[small]
    # Taylor: phi_k(z) = sum_j z^j / (j + k)!
    p1 = np.zeros_like(zs)
    p2 = np.zeros_like(zs)
    term = np.ones_like(zs)
    for j in range(25):
        p1 += term / math.factorial(j + 1)
        p2 += term / math.factorial(j + 2)
        term = term * zs
    phi1[small] = p1
    phi2[small] = p2
    zb = z[~small]
    ez = np.exp(zb)
    phi1[~small] = (ez - 1) / zb
    phi2[~small] = (ez - 1 - zb) / zb**2
    return phi1, phi2


def linear_propagate(c: SpectralField, dt: float, p: ModelParams) -> SpectralField:
    """Advance the linear part exactly: u <- exp(lam dt) u."""
    if dt < 0:
        raise BackwardTimeError(f"dt must be >= 0, got {dt}")
    if dt == 0:
        return c
    lam = linear_symbol(c.grid, p)
    return c.with_coeffs(np.exp(lam * dt) * c.coeffs, time=c.time + dt)


def _forcing(coeffs: np.ndarray, t: float, grid: GridSpec, p: ModelParams, nonlinear: bool):
    if not nonlinear:
        return np.zeros_like(coeffs)
    A = nonlinear_term(SpectralField(grid, coeffs, t)).coeffs
    return math.exp(p.beta * t) * A


def _contraction_ratio(history: list, floor: float) -> float:
    ratios = [b / a for a, b in zip(history, history[1:]) if a > 0 and b > floor]
    if ratios:
        return float(np.exp(np.mean(np.log(ratios))))
    if len(history) >= 2 and history[0] > 0:
        return float(history[1] / history[0])
    return 0.0


def _picard_once(c0, p, delta, cfg, nonlinear):
    grid = c0.grid
    K = int(cfg.nodes_per_window)
    h = delta / (K - 1)
    t0 = c0.time
    times = t0 + h * np.arange(K)
    lam = linear_symbol(grid, p)
    E = np.exp(lam * h)
    phi1, phi2 = phi_functions(lam * h)
    w1 = h * phi2
    w0 = h * (phi1 - phi2)

    U = [c0.coeffs.copy()]
    for _ in range(K - 1):
        U.append(E * U[-1])
    history = []
    converged = False
    for it in range(1, cfg.picard_max_iter + 1):
        N = [_forcing(u, t, grid, p, nonlinear) for u, t in zip(U, times)]
        V = [U[0]]
        for k in range(K - 1):
            V.append(E * V[k] + w0 * N[k] + w1 * N[k + 1])
        scale = max(max(float(np.max(np.abs(v))) for v in V), 1e-300)
        res = max(float(np.max(np.abs(v - u))) for u, v in zip(U, V))
        history.append(res)
        U = V
        if not np.isfinite(res) or res > 1e8 * max(scale, 1.0):
            break
        if res <= cfg.picard_tol * max(1.0, scale):
            converged = True
            break
        # stalled at round-off: further sweeps cannot reduce the residual
        if len(history) >= 3 and res <= 100 * _EPS * scale and res >= history[-2]:
            converged = True
            break
    floor = 100 * _EPS * max(float(np.max(np.abs(U[0]))), 1e-300)
    report = PicardReport(
        iterations=len(history),
        residual_history=history,
        contraction_ratio=_contraction_ratio(history, floor),
        converged=converged,
        window=delta,
    )
    nodes = [enforce_symmetry(SpectralField(grid, u, t)) for u, t in zip(U, times)]
    return nodes, report


def picard_window(
    c0: SpectralField,
    p: ModelParams,
    cfg: SolverConfig,
    delta: float | None = None,
    nonlinear: bool = True,
):
    """Fixed point of the mild equation on [t0, t0 + delta] at the window nodes.

    Returns ``(nodes, report)`` where ``nodes[0]`` is ``c0``.  With
    ``cfg.adapt_window`` the window is halved (at most 20 times) until the
    iteration converges; ``report.window`` holds the window actually used.
    """
    c0 = galerkin_project(c0)
    delta = cfg.window if delta is None else float(delta)
    halvings = 0
    while True:
        nodes, report = _picard_once(c0, p, delta, cfg, nonlinear)
        report.halvings = halvings
        if report.converged:
            return nodes, report
        if not cfg.adapt_window or halvings >= MAX_HALVINGS:
            raise ContractionFailure(
                f"Picard iteration did not contract on window {delta:.3e} "
                f"(ratio {report.contraction_ratio:.3e}, "
                f"residual {report.residual_history[-1]:.3e})",
                report=report,
            )
        delta /= 2
        halvings += 1


def solve(
    c0: SpectralField,
    t_end: float,
    p: ModelParams,
    cfg: SolverConfig,
    record_nodes: bool = False,
    nonlinear: bool = True,
) -> Trajectory:
    """Chain Picard windows from ``c0.time`` to ``t_end``.

    Snapshots are taken at window ends (and at interior nodes when
    ``record_nodes``).  The last window is shortened to land on ``t_end``.
    """
    if not t_end > c0.time:
        raise ConfigError(f"t_end={t_end} must exceed the start time {c0.time}")
    current = galerkin_project(c0)
    traj = Trajectory([current], p, cfg)
    delta = cfg.window
    span = t_end - c0.time
    while True:
        remaining = t_end - current.time
        if remaining <= 1e-12 * span:
            break
        # absorb round-off so the last window lands on t_end
        step = remaining if remaining <= delta * (1 + 1e-9) else delta
        try:
            nodes, rep = picard_window(current, p, cfg, delta=step, nonlinear=nonlinear)
        except ContractionFailure as exc:
            exc.trajectory = traj
            raise
        if rep.halvings:
            delta = rep.window  # keep the window that worked
        traj.contraction_log.append(
            (rep.window, rep.iterations, rep.residual_history[-1], rep.contraction_ratio)
        )
        end = nodes[-1]
        if rep.window == step and step == remaining:
            end = end.with_coeffs(end.coeffs, time=t_end)
        if record_nodes:
            traj.snapshots.extend(nodes[1:-1])
        traj.snapshots.append(end)
        current = end
    return traj


def oracle_step(c: SpectralField, dt: float, p: ModelParams, substeps: int) -> SpectralField:
    """Integrating-factor (Lawson) RK4 reference integrator."""
    if dt < 0:
        raise BackwardTimeError(f"dt must be >= 0, got {dt}")
    if substeps < 1:
        raise ConfigError("substeps must be >= 1")
    grid = c.grid
    h = dt / substeps
    if p.alpha * grid.ny**2 * h > 1:
        raise StiffnessError(
            f"substep {h:.3e} does not resolve alpha*ny^2 = {p.alpha * grid.ny**2:.3e}"
        )
    lam = linear_symbol(grid, p)
    E2 = np.exp(lam * h / 2)
    E = E2 * E2
    u = galerkin_project(c).coeffs.copy()
    t = c.time

    def N(v, s):
        return _forcing(v, s, grid, p, True)

    for _ in range(substeps):
        k1 = N(u, t)
        k2 = N(E2 * (u + h / 2 * k1), t + h / 2)
        k3 = N(E2 * u + h / 2 * k2, t + h / 2)
        k4 = N(E * u + h * E2 * k3, t + h)
        u = E * u + h / 6 * (E * k1 + 2 * E2 * (k2 + k3) + k4)
        t += h
    return enforce_symmetry(SpectralField(grid, u, c.time + dt))


def gauge_transform(f: PhysicalField, c0_mean: float, t: float) -> PhysicalField:
    """Solution with constant y-mean C0 from the zero-mean one.

    U(x, y, t) = w(x - 2 C0 t, y, t) + C0, applied as the phase factor
    exp(-2 i C0 t m) on each x-Fourier mode.
    """
    if c0_mean == 0:
        return f
    grid = f.grid
    F = scipy.fft.fft(f.values, axis=0, workers=fft_workers())
    m = grid.m.astype(float)
    phase = np.exp(-2j * c0_mean * t * m)
    phase[grid.nyquist_row()] = math.cos(2 * c0_mean * t * grid.nx / 2)
    shifted = scipy.fft.ifft(F * phase[:, None], axis=0, workers=fft_workers()).real
    return PhysicalField(grid, shifted + c0_mean, f.time)


def check_trajectory_symmetry(traj: Trajectory) -> float:
    """Largest relative symmetry defect over all snapshots."""
    worst = 0.0
    for s in traj.snapshots:
        scale = s.max_abs()
        if scale:
            worst = max(worst, check_symmetry(s.coeffs, rtol=1.0) / scale)
    return worst
