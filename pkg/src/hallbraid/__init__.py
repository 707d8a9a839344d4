"""Pseudospectral simulation and verification tools for a diffusive-dispersive
braided-river sediment model on the strip [0, 2 pi) x [0, pi]."""

from .errors import *  # noqa: F401,F403
from .spectral import (
    GridSpec,
    ModelParams,
    PhysicalField,
    SpectralField,
    dispersion_symbol,
    enforce_symmetry,
    forward_transform,
    inverse_transform,
    nonlinear_term,
)
from .solver import (
    PicardReport,
    SolverConfig,
    Trajectory,
    gauge_transform,
    linear_propagate,
    oracle_step,
    picard_window,
    solve,
)
from .diagnostics import (
    CutoffSpec,
    EnergyLedger,
    dissipation,
    energy_balance,
    hs0b_norm,
    l2_energy,
    pde_residual,
    tsb_norm,
)
from .kernel import (
    KernelReport,
    PartitionLabel,
    Truncation,
    WeightSpec,
    classify,
    kernel_sum,
    q_factor,
    resonance_f,
    resonance_gap,
    sup_scan,
    weight,
)
from .lemmas import check_lemmas
from .io import RunConfig, load_initial_condition, read_snapshot, write_snapshot

__version__ = "0.1.0"
