"""Run configuration, snapshot files and initial-condition ingestion.

Snapshot format (text)::

    HALLBRAID-SNAP v1
    # nx 32
    # ny 32
    # time 0.5
    # alpha 1 / beta 0.5 / gamma 1   (one key per line)
    # config_sha256 <hex>
    # columns m n re im
    0 1 0.5 0
    ...

Only m = 0 .. nx/2 - 1 and the Nyquist row m = -nx/2 are written (negative m
follow from conjugate symmetry); exactly zero coefficients are omitted.
Records are sorted by (n, m) and printed with 17 significant digits, which
round-trips IEEE doubles exactly.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, MeanModeError, ParseError
from .solver import SolverConfig
from .spectral import (
    GridSpec,
    ModelParams,
    PhysicalField,
    SpectralField,
    enforce_symmetry,
    forward_transform,
    galerkin_project,
)

SNAP_TAG = "HALLBRAID-SNAP v1"
MEAN_VARIATION_TOL = 1e-8

# key -> (type, default); order fixes the canonical text used for hashing
CONFIG_KEYS = {
    "alpha": (float, 1.0),
    "beta": (float, 0.0),
    "gamma": (float, 1.0),
    "nx": (int, 16),
    "ny": (int, 16),
    "padded_nx": (int, 0),
    "padded_ny": (int, 0),
    "window": (float, 1e-2),
    "nodes_per_window": (int, 9),
    "picard_tol": (float, 1e-12),
    "picard_max_iter": (int, 50),
    "adapt_window": (bool, False),
    "t_end": (float, 0.1),
    "snapshot_stride": (int, 1),
    "output_dir": (str, "hallbraid_out"),
    "seed": (int, 0),
    "initial": (str, "random"),
    "amplitude": (float, 0.1),
}


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


def read_config_file(path) -> dict:
    return parse_config_text(Path(path).read_text())


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams
    grid: GridSpec
    solver: SolverConfig
    t_end: float
    snapshot_stride: int = 1
    output_dir: str = "hallbraid_out"
    seed: int = 0
    initial: str = "random"
    amplitude: float = 0.1

    def __post_init__(self):
        if not self.t_end > 0:
            raise ConfigError(f"t_end must be positive, got {self.t_end}")
        if self.snapshot_stride < 1:
            raise ConfigError("snapshot_stride must be >= 1")
        if not (self.initial == "random" or self.initial.startswith(("cos:", "file:"))):
            raise ConfigError(f"initial must be random, cos:<n> or file:<path>, got {self.initial!r}")

    @classmethod
    def from_mapping(cls, values: dict) -> "RunConfig":
        v = {}
        for key, (typ, default) in CONFIG_KEYS.items():
            raw = values.get(key, default)
            try:
                if typ is bool:
                    v[key] = raw if isinstance(raw, bool) else _parse_bool(str(raw))
                elif typ is int:
                    f = float(raw)
                    if f != int(f):
                        raise ValueError
                    v[key] = int(f)
                else:
                    v[key] = typ(raw)
            except ValueError:
                raise ConfigError(f"bad value for {key}: {raw!r}") from None
        return cls(
            model=ModelParams(v["alpha"], v["beta"], v["gamma"]),
            grid=GridSpec(v["nx"], v["ny"], v["padded_nx"], v["padded_ny"]),
            solver=SolverConfig(v["window"], v["nodes_per_window"], v["picard_tol"],
                                v["picard_max_iter"], v["adapt_window"]),
            t_end=v["t_end"],
            snapshot_stride=v["snapshot_stride"],
            output_dir=v["output_dir"],
            seed=v["seed"],
            initial=v["initial"],
            amplitude=v["amplitude"],
        )

    def to_mapping(self) -> dict:
        m, g, s = self.model, self.grid, self.solver
        return {
            "alpha": m.alpha, "beta": m.beta, "gamma": m.gamma,
            "nx": g.nx, "ny": g.ny, "padded_nx": g.padded_nx, "padded_ny": g.padded_ny,
            "window": s.window, "nodes_per_window": s.nodes_per_window,
            "picard_tol": s.picard_tol, "picard_max_iter": s.picard_max_iter,
            "adapt_window": s.adapt_window, "t_end": self.t_end,
            "snapshot_stride": self.snapshot_stride, "output_dir": self.output_dir,
            "seed": self.seed, "initial": self.initial, "amplitude": self.amplitude,
        }

    def to_text(self) -> str:
        lines = []
        for key, value in self.to_mapping().items():
            if isinstance(value, float):
                value = repr(value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        """sha256 of the canonical text, excluding the output location."""
        text = "\n".join(l for l in self.to_text().splitlines() if not l.startswith("output_dir"))
        return hashlib.sha256(text.encode()).hexdigest()


# ---------------------------------------------------------------------------
# snapshots


def _fmt(x: float) -> str:
    return "%.17g" % x


def snapshot_text(c: SpectralField, params: ModelParams | None = None, config_hash: str = "") -> str:
    g = c.grid
    lines = [SNAP_TAG, f"# nx {g.nx}", f"# ny {g.ny}",
             f"# padded_nx {g.padded_nx}", f"# padded_ny {g.padded_ny}",
             f"# time {_fmt(c.time)}"]
    if params is not None:
        lines += [f"# alpha {_fmt(params.alpha)}", f"# beta {_fmt(params.beta)}",
                  f"# gamma {_fmt(params.gamma)}"]
    if config_hash:
        lines.append(f"# config_sha256 {config_hash}")
    lines.append("# columns m n re im")
    ms = list(range(0, g.nx // 2)) + [-g.nx // 2]
    for n in range(1, g.ny + 1):
        for m in sorted(ms):
            v = c.coeffs[m % g.nx, n - 1]
            if v != 0:
                lines.append(f"{m} {n} {_fmt(v.real)} {_fmt(v.imag)}")
    return "\n".join(lines) + "\n"


def write_snapshot(path, c: SpectralField, params=None, config_hash: str = "") -> None:
    Path(path).write_text(snapshot_text(c, params, config_hash))


def parse_snapshot(text: str) -> tuple[SpectralField, dict]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != SNAP_TAG:
        raise ParseError(f"missing {SNAP_TAG!r} tag")
    header = {}
    records = []
    for lineno, raw in enumerate(lines[1:], 2):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split(None, 1)
            if len(parts) == 2:
                header[parts[0]] = parts[1]
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ParseError(f"line {lineno}: expected 'm n re im'")
        try:
            records.append((int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3])))
        except ValueError:
            raise ParseError(f"line {lineno}: malformed record") from None
    try:
        grid = GridSpec(int(header["nx"]), int(header["ny"]),
                        int(header.get("padded_nx", 0)), int(header.get("padded_ny", 0)))
        time = float(header.get("time", 0.0))
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad snapshot header: {exc}") from None
    coeffs = np.zeros(grid.shape, complex)
    for m, n, re, im in records:
        if not (-grid.nx // 2 <= m < grid.nx // 2 and 1 <= n <= grid.ny):
            raise ParseError(f"mode ({m}, {n}) outside the grid")
        v = complex(re, im)
        coeffs[m % grid.nx, n - 1] = v
        if 0 < m < grid.nx // 2:
            coeffs[(-m) % grid.nx, n - 1] = np.conj(v)
    params = None
    if all(k in header for k in ("alpha", "beta", "gamma")):
        params = ModelParams(float(header["alpha"]), float(header["beta"]), float(header["gamma"]))
    header["params"] = params
    return SpectralField(grid, coeffs, time), header


def read_snapshot(path) -> tuple[SpectralField, dict]:
    return parse_snapshot(Path(path).read_text())


# ---------------------------------------------------------------------------
# initial conditions


def _grid_table(text: str):
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 3:
            raise ParseError(f"line {lineno}: expected 'x y value'")
        try:
            rows.append(tuple(float(p) for p in parts))
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric entry") from None
    if not rows:
        raise ParseError("empty grid table")
    a = np.array(rows)
    xs = np.unique(np.round(a[:, 0], 12))
    ys = np.unique(np.round(a[:, 1], 12))
    nx, ny = xs.size, ys.size - 1
    if a.shape[0] != nx * (ny + 1):
        raise ParseError(f"table has {a.shape[0]} rows, expected {nx} x {ny + 1}")
    try:
        grid = GridSpec(nx, ny)
    except ConfigError as exc:
        raise ParseError(f"unsupported table size: {exc}") from None
    if np.max(np.abs(xs - grid.x)) > 1e-9 or np.max(np.abs(ys - grid.y)) > 1e-9:
        raise ParseError("samples must sit on x = 2 pi i / nx and y = pi j / ny")
    ix = np.rint(a[:, 0] * nx / (2 * np.pi)).astype(int)
    iy = np.rint(a[:, 1] * ny / np.pi).astype(int)
    values = np.full(grid.physical_shape, np.nan)
    values[ix, iy] = a[:, 2]
    if np.isnan(values).any():
        raise ParseError("grid table has missing or duplicate samples")
    return grid, values


def grid_table_text(f: PhysicalField) -> str:
    X, Y = f.grid.mesh()
    return "".join(f"{_fmt(x)} {_fmt(y)} {_fmt(v)}\n"
                   for x, y, v in zip(X.ravel(), Y.ravel(), f.values.ravel()))


def load_initial_condition(path) -> tuple[SpectralField, float]:
    """Read a snapshot or an ``x y value`` table; return (field, C0).

    A constant y-mean C0 is stripped and returned; a y-mean that varies with
    x by more than 1e-8 is rejected.
    """
    text = Path(path).read_text()
    if text.lstrip().startswith("HALLBRAID-SNAP"):
        c, _ = parse_snapshot(text)
        return enforce_symmetry(c), 0.0
    grid, values = _grid_table(text)
    f = PhysicalField(grid, values)
    means = f.column_means()
    if np.ptp(means) > MEAN_VARIATION_TOL:
        raise MeanModeError(f"y-mean varies with x by {np.ptp(means):.3e}")
    c0 = float(np.mean(means))
    c = forward_transform(PhysicalField(grid, values - means[:, None]))
    return c, c0


def synthetic_initial(cfg: RunConfig) -> SpectralField:
    """Initial data named by ``cfg.initial`` (file data is regridded only if sizes match)."""
    g = cfg.grid
    if cfg.initial == "random":
        rng = np.random.default_rng(cfg.seed)
        m = g.m.astype(float)[:, None]
        n = g.n.astype(float)[None, :]
        envelope = np.exp(-(m**2 + n**2) / 8.0)
        raw = (rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)) * envelope
        c = enforce_symmetry(galerkin_project(SpectralField(g, raw)))
        peak = c.max_abs()
        return c.with_coeffs(c.coeffs * (cfg.amplitude / peak)) if peak else c
    if cfg.initial.startswith("cos:"):
        try:
            n = int(cfg.initial[4:])
        except ValueError:
            raise ConfigError(f"bad initial spec {cfg.initial!r}") from None
        if not 1 <= n <= g.ny:
            raise ConfigError(f"cos:{n} outside 1..ny")
        return SpectralField.from_modes(g, {(0, n): cfg.amplitude / 2})
    c, c0 = load_initial_condition(cfg.initial[5:])
    if c.grid.shape != g.shape:
        raise ConfigError(f"initial file grid {c.grid.shape} != config grid {g.shape}")
    if c0 != 0:
        raise ConfigError("initial data with a nonzero y-mean needs the gauge transform; "
                          "strip the mean before running")
    return SpectralField(g, c.coeffs, 0.0)


def write_table(path, header: list, rows, config_hash: str = "") -> None:
    lines = []
    if config_hash:
        lines.append(f"# config_sha256 {config_hash}")
    lines.append("\t".join(header))
    for r in rows:
        lines.append("\t".join(_fmt(x) if isinstance(x, float) else str(x) for x in r))
    Path(path).write_text("\n".join(lines) + "\n")
