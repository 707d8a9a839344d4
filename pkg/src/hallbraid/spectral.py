"""Fourier-cosine representation of fields on the strip [0, 2pi) x [0, pi].

Coefficient convention
----------------------
A zero-mean field is written as

    u(x, y) = sum_m sum_{n != 0} u[m, n] exp(i m x + i n y),   u[m, -n] = u[m, n],

and only ``n = 1 .. ny`` is stored, so the amplitude of ``exp(i m x) cos(n y)``
is ``2 u[m, n]``; ``cos(y)`` is stored as ``u[0, 1] = 1/2``.  Reality of ``u``
is the conjugate symmetry ``u[-m, n] = conj(u[m, n])``.

The m axis of a coefficient array uses FFT ordering (row ``k`` holds
``m = k`` for ``k < nx/2`` and ``m = k - nx`` otherwise).  The Nyquist row
``m = -nx/2`` is its own mirror: it is kept so that grid data round-trips
exactly, but it is dynamically inactive (no dispersion, dropped by the
nonlinear term and by the solvers).

Physical samples live on ``x_i = 2 pi i / nx`` (``nx`` points) and on the
cosine (DCT-I) grid ``y_j = pi j / ny`` (``ny + 1`` points, both walls).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .errors import ConfigError, DomainError, MeanModeError, ShapeError, SymmetryError

MEAN_TOL = 1e-10
SYMMETRY_TOL = 1e-12


def fft_workers() -> int:
    """Thread count for transforms, capped by ``HALLBRAID_THREADS``."""
    try:
        return max(1, int(os.environ.get("HALLBRAID_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of u_yyt - g u_xxx - a u_yyyy - b u_yy + (u^2)_xyy = 0."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if self.gamma == 0 or not np.isfinite(self.gamma):
            raise ConfigError(f"gamma must be finite and nonzero, got {self.gamma}")
        if not np.isfinite(self.beta):
            raise ConfigError(f"beta must be finite, got {self.beta}")


@dataclass(frozen=True)
class GridSpec:
    """Mode counts and dealiasing sizes.

    ``padded_nx``/``padded_ny`` default to the smallest sizes for which the
    padded product of two band-limited fields is alias free: ``3 nx / 2``
    points in x and a DCT-I of order ``3 ny / 2 + 1`` in y (the cosine grid
    folds ``cos(k y)`` onto ``cos((2P - k) y)``, so ``2P > 3 ny`` is needed).
    """

    nx: int
    ny: int
    padded_nx: int = 0
    padded_ny: int = 0

    def __post_init__(self):
        for name in ("nx", "ny"):
            v = getattr(self, name)
            if int(v) != v or v < 4 or v % 2:
                raise ConfigError(f"{name} must be an even integer >= 4, got {v}")
        if not self.padded_nx:
            object.__setattr__(self, "padded_nx", 3 * self.nx // 2)
        if not self.padded_ny:
            object.__setattr__(self, "padded_ny", 3 * self.ny // 2 + 1)
        if 2 * self.padded_nx < 3 * self.nx:
            raise ConfigError(f"padded_nx={self.padded_nx} below 3*nx/2")
        if 2 * self.padded_ny <= 3 * self.ny:
            raise ConfigError(f"padded_ny={self.padded_ny} must exceed 3*ny/2")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def physical_shape(self) -> tuple[int, int]:
        return (self.nx, self.ny + 1)

    @property
    def m(self) -> np.ndarray:
        return np.rint(np.fft.fftfreq(self.nx, 1.0 / self.nx)).astype(int)

    @property
    def n(self) -> np.ndarray:
        return np.arange(1, self.ny + 1)

    @property
    def x(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.nx) / self.nx

    @property
    def y(self) -> np.ndarray:
        return np.pi * np.arange(self.ny + 1) / self.ny

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def index(self, m: int, n: int) -> tuple[int, int]:
        """Array position of mode (m, n), n >= 1."""
        if not (-self.nx // 2 <= m < self.nx // 2) or not (1 <= n <= self.ny):
            raise DomainError(f"mode ({m}, {n}) not on a {self.nx}x{self.ny} grid")
        return (m % self.nx, n - 1)

    def nyquist_row(self) -> int:
        return self.nx // 2


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpectralField:
    """Coefficients u[m, n](t) of the renormalized expansion (no exp(beta t))."""

    grid: GridSpec
    coeffs: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != self.grid.shape:
            raise ShapeError(f"coeffs shape {c.shape} != grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", _frozen(c))
        object.__setattr__(self, "time", float(self.time))

    @classmethod
    def zeros(cls, grid: GridSpec, time: float = 0.0) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, complex), time)

    @classmethod
    def from_modes(cls, grid: GridSpec, modes: dict, time: float = 0.0) -> "SpectralField":
        """Build from ``{(m, n): value}``; mirrors ``(-m, n)`` are filled in."""
        c = np.zeros(grid.shape, complex)
        for (m, n), v in modes.items():
            c[grid.index(m, n)] = v
            if m != 0 and -m >= -grid.nx // 2:
                c[grid.index(-m, n)] = np.conj(v)
        return cls(grid, c, time)

    def with_coeffs(self, coeffs, time=None) -> "SpectralField":
        return SpectralField(self.grid, coeffs, self.time if time is None else time)

    def __neg__(self):
        return self.with_coeffs(-self.coeffs)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0


@dataclass(frozen=True)
class PhysicalField:
    """Samples u(x_i, y_j) on the grid described in the module docstring."""

    grid: GridSpec
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.physical_shape:
            raise ShapeError(f"values shape {v.shape} != {self.grid.physical_shape}")
        object.__setattr__(self, "values", _frozen(v))
        object.__setattr__(self, "time", float(self.time))

    @classmethod
    def from_function(cls, grid: GridSpec, func, time: float = 0.0) -> "PhysicalField":
        X, Y = grid.mesh()
        return cls(grid, np.broadcast_to(func(X, Y), grid.physical_shape), time)

    def column_means(self) -> np.ndarray:
        """Trapezoid y-mean of every x column (exact for the cosine grid)."""
        v = self.values
        return (v[:, 0] / 2 + v[:, 1:-1].sum(axis=1) + v[:, -1] / 2) / self.grid.ny


# ---------------------------------------------------------------------------
# cosine-grid transforms on raw arrays; ``a`` holds cosine amplitudes for
# n = 0..N so that f(y_j) = sum_n a_n cos(n y_j)


def _dct_forward(values: np.ndarray, N: int) -> np.ndarray:
    d = scipy.fft.dct(values, type=1, axis=-1, workers=fft_workers())
    a = d / N
    a[..., 0] /= 2
    a[..., -1] /= 2
    return a


def _dct_inverse(a: np.ndarray) -> np.ndarray:
    x = np.array(a, copy=True)
    x[..., 1:-1] /= 2
    return scipy.fft.dct(x, type=1, axis=-1, workers=fft_workers())


def grid_to_amplitudes(values: np.ndarray) -> np.ndarray:
    """Cosine amplitudes a[m, n], n = 0..N, of real samples on an (Px, N+1) grid."""
    N = values.shape[-1] - 1
    F = scipy.fft.fft(values, axis=0, workers=fft_workers()) / values.shape[0]
    return _dct_forward(F, N)


def amplitudes_to_grid(a: np.ndarray) -> np.ndarray:
    """Inverse of :func:`grid_to_amplitudes`; returns complex samples."""
    f = _dct_inverse(a)
    return scipy.fft.ifft(f, axis=0, workers=fft_workers()) * a.shape[0]


def pad_coeffs(c: np.ndarray, Px: int, Pn: int) -> np.ndarray:
    """Embed an (nx, ny) coefficient array into (Px, Pn) keeping FFT order in m."""
    nx, ny = c.shape
    out = np.zeros((Px, Pn), dtype=c.dtype)
    h = nx // 2
    out[:h, :ny] = c[:h]
    out[Px - h + 1 :, :ny] = c[h + 1 :]
    if Px == nx:
        out[h, :ny] = c[h]  # on a larger grid the Nyquist row is dropped
    return out


def unpad_coeffs(c: np.ndarray, nx: int, ny: int) -> np.ndarray:
    """Galerkin truncation of a padded coefficient array to |m| < nx/2, n <= ny."""
    Px = c.shape[0]
    h = nx // 2
    out = np.zeros((nx, ny), dtype=c.dtype)
    out[:h] = c[:h, :ny]
    out[h + 1 :] = c[Px - h + 1 :, :ny]
    return out


def coeffs_to_amplitudes(coeffs: np.ndarray) -> np.ndarray:
    """Stored u[m, n] -> cosine amplitudes with a zero n = 0 column."""
    nx, ny = coeffs.shape
    a = np.zeros((nx, ny + 1), complex)
    a[:, 1:] = 2 * coeffs
    return a


# ---------------------------------------------------------------------------


def check_symmetry(coeffs: np.ndarray, rtol: float = SYMMETRY_TOL) -> float:
    """Largest |u[-m, n] - conj(u[m, n])|; raise SymmetryError above tolerance."""
    mirror = np.conj(np.roll(coeffs[::-1], 1, axis=0))
    err = float(np.max(np.abs(coeffs - mirror))) if coeffs.size else 0.0
    scale = float(np.max(np.abs(coeffs))) if coeffs.size else 0.0
    if err > rtol * scale + 1e-300:
        raise SymmetryError(f"conjugate symmetry broken: {err:.3e} (scale {scale:.3e})")
    return err


def enforce_symmetry(c: SpectralField) -> SpectralField:
    """Project onto u[-m, n] = conj(u[m, n]) by averaging mirror pairs.

    The projection is exact and idempotent bit for bit; the Nyquist row maps
    onto itself and is replaced by its real part.
    """
    a = c.coeffs
    mirror = np.conj(np.roll(a[::-1], 1, axis=0))
    return c.with_coeffs((a + mirror) / 2)


def forward_transform(f: PhysicalField) -> SpectralField:
    """Project grid samples onto the Fourier-cosine basis.

    Raises MeanModeError if any column carries a y-mean above round-off.
    """
    if f.values.shape != f.grid.physical_shape:
        raise ShapeError(f"values shape {f.values.shape} != {f.grid.physical_shape}")
    a = grid_to_amplitudes(f.values)
    scale = max(1.0, float(np.max(np.abs(f.values))))
    mean = np.max(np.abs(a[:, 0]))
    if mean > MEAN_TOL * scale:
        raise MeanModeError(f"field has y-mean content {mean:.3e}")
    out = SpectralField(f.grid, a[:, 1:] / 2, f.time)
    return enforce_symmetry(out)


def inverse_transform(c: SpectralField, params: ModelParams | None = None) -> PhysicalField:
    """Evaluate coefficients on the physical grid.

    With ``params`` the exp(beta t) prefactor of the physical solution is
    applied; without it the renormalized field is returned.
    """
    check_symmetry(c.coeffs)
    vals = amplitudes_to_grid(coeffs_to_amplitudes(c.coeffs))
    scale = float(np.max(np.abs(vals))) if vals.size else 0.0
    if np.max(np.abs(vals.imag)) > 1e-12 * max(scale, 1e-300):
        raise SymmetryError("inverse transform produced an imaginary residue")
    out = vals.real
    if params is not None:
        out = out * np.exp(params.beta * c.time)
    return PhysicalField(c.grid, out, c.time)


def dispersion_symbol(m, n, params: ModelParams):
    """l[m, n] = gamma m^3 / n^2 (vectorized over m, n)."""
    n_arr = np.asarray(n)
    if np.any(n_arr == 0):
        raise DomainError("dispersion symbol undefined for n = 0")
    m_arr = np.asarray(m, dtype=float)
    out = params.gamma * m_arr**3 / n_arr.astype(float) ** 2
    return float(out) if np.ndim(out) == 0 else out


def linear_symbol(grid: GridSpec, params: ModelParams) -> np.ndarray:
    """-alpha n^2 + i l[m, n] on the stored lattice (Nyquist row: no dispersion)."""
    m = grid.m.astype(float)[:, None]
    n = grid.n.astype(float)[None, :]
    lam = -params.alpha * n**2 + 1j * params.gamma * m**3 / n**2
    lam[grid.nyquist_row()] = -params.alpha * grid.n.astype(float) ** 2
    return lam


def galerkin_project(c: SpectralField) -> SpectralField:
    """Zero the inactive Nyquist row and restore exact symmetry."""
    a = np.array(c.coeffs)
    a[c.grid.nyquist_row()] = 0
    return enforce_symmetry(c.with_coeffs(a))


def square_coeffs(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Coefficients of w^2 (same convention, n = 1..ny) for w = sum u exp(imx+iny).

    Computed on the padded grid, which is alias free for the retained band.
    """
    a = coeffs_to_amplitudes(coeffs)
    a[grid.nyquist_row()] = 0
    padded = pad_coeffs(a, grid.padded_nx, grid.padded_ny + 1)
    w = amplitudes_to_grid(padded).real
    sq = grid_to_amplitudes(w * w)
    return unpad_coeffs(sq[:, 1:], grid.nx, grid.ny) / 2


def nonlinear_term(c: SpectralField) -> SpectralField:
    """A[m, n] = -i m sum u[m', n'] u[m - m', n - n'] over n' != 0, n.

    Pseudospectral evaluation with 3/2 zero padding; the result is Galerkin
    truncated to |m| < nx/2, n <= ny.
    """
    check_symmetry(c.coeffs)
    grid = c.grid
    sq = square_coeffs(c.coeffs, grid)
    A = -1j * grid.m[:, None] * sq
    A[grid.nyquist_row()] = 0
    return enforce_symmetry(c.with_coeffs(A))


def nonlinear_term_direct(c: SpectralField) -> SpectralField:
    """Direct double sum for A[m, n]; O(nx^2 ny^2), used as an oracle."""
    grid = c.grid
    nx, ny = grid.shape
    h = nx // 2
    full = {}
    for m in range(-h + 1, h):
        for n in range(1, ny + 1):
            v = c.coeffs[m % nx, n - 1]
            full[(m, n)] = v
            full[(m, -n)] = v
    A = np.zeros(grid.shape, complex)
    for m in range(-h + 1, h):
        for n in range(1, ny + 1):
            acc = 0j
            for (mp, np_), v in full.items():
                if np_ == n:
                    continue
                w = full.get((m - mp, n - np_))
                if w is not None:
                    acc += v * w
            A[m % nx, n - 1] = -1j * m * acc
    return c.with_coeffs(A)


def coefficient_norm_sq(c: SpectralField) -> float:
    """Continuous L^2 norm squared of the renormalized field, 4 pi^2 sum |u|^2."""
    return float(4 * np.pi**2 * np.sum(np.abs(c.coeffs) ** 2))


def grid_norm_sq(f: PhysicalField) -> float:
    """Rectangle-in-x, trapezoid-in-y quadrature of u^2 over the strip."""
    v2 = f.values**2
    g = f.grid
    col = (v2[:, 0] / 2 + v2[:, 1:-1].sum(axis=1) + v2[:, -1] / 2) * np.pi / g.ny
    return float(col.sum() * 2 * np.pi / g.nx)


def discrete_parseval_norm_sq(c: SpectralField) -> float:
    """Coefficient norm matching :func:`grid_norm_sq` exactly.

    The top cosine mode n = ny is its own alias on the DCT-I grid and is
    weighted twice as heavily as on the continuum.
    """
    w = np.full(c.grid.ny, 4 * np.pi**2)
    w[-1] *= 2
    return float(np.sum(np.abs(c.coeffs) ** 2 * w[None, :]))
