import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hallbraid import (
    GridSpec,
    ModelParams,
    PhysicalField,
    SolverConfig,
    SpectralField,
    gauge_transform,
    inverse_transform,
    linear_propagate,
    oracle_step,
    picard_window,
    solve,
)
from hallbraid.diagnostics import pde_residual, pde_residual_fields
from hallbraid.errors import BackwardTimeError, ConfigError, ContractionFailure, StiffnessError
from hallbraid.solver import check_trajectory_symmetry, phi_functions

from conftest import random_field


def test_phi_functions_against_direct_formula():
    z = np.array([-30.0, -2.0, -1.0001, -0.5, -1e-6, 0.0, 1e-3, 0.9, 3.0, -1 + 2j])
    p1, p2 = phi_functions(z)
    for zi, a, b in zip(z, p1, p2):
        if abs(zi) > 1e-2:
            assert a == pytest.approx((np.exp(zi) - 1) / zi, rel=1e-13)
            assert b == pytest.approx((np.exp(zi) - 1 - zi) / zi**2, rel=1e-10)
    assert p1[5] == 1.0 and p2[5] == 0.5
    assert p1[4] == pytest.approx(1 - 0.5e-6, rel=1e-14)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_decoupled_mode_is_exact(n):
    g = GridSpec(8, 8)
    p = ModelParams(1.0, 0.5, 1.0)
    c0 = SpectralField.from_modes(g, {(0, n): 0.5})
    traj = solve(c0, 0.5, p, SolverConfig())
    f = inverse_transform(traj.final(), p)
    X, Y = g.mesh()
    exact = np.exp((0.5 - n**2) * 0.5) * np.cos(n * Y)
    assert traj.final().time == 0.5
    assert np.linalg.norm(f.values - exact) / np.linalg.norm(exact) < 1e-12


def test_linear_propagation_composes():
    g = GridSpec(8, 8)
    p = ModelParams(0.3, 0.1, 2.0)
    c = random_field(g, np.random.default_rng(0))
    a = linear_propagate(linear_propagate(c, 0.1, p), 0.2, p)
    b = linear_propagate(c, 0.3, p)
    np.testing.assert_allclose(a.coeffs, b.coeffs, rtol=1e-13, atol=1e-15)
    assert linear_propagate(c, 0.0, p) is c
    with pytest.raises(BackwardTimeError):
        linear_propagate(c, -0.1, p)


def test_zero_field_stays_zero():
    g = GridSpec(8, 8)
    traj = solve(SpectralField.zeros(g), 0.05, ModelParams(1, 0, 1), SolverConfig())
    assert all(np.all(s.coeffs == 0) for s in traj.snapshots)


def test_picard_matches_lawson_oracle():
    g = GridSpec(8, 8)
    p = ModelParams(1.0, 0.2, 1.0)
    c = random_field(g, np.random.default_rng(3), scale=0.05)
    ref = oracle_step(c, 0.1, p, substeps=800)
    errs = []
    for K in (9, 17, 33):
        traj = solve(c, 0.1, p, SolverConfig(window=1e-2, nodes_per_window=K))
        errs.append(np.max(np.abs(traj.final().coeffs - ref.coeffs)) / ref.max_abs())
    assert errs[-1] < 2e-6
    # node spacing halves each rung: second-order convergence
    assert 3.5 < errs[0] / errs[1] < 4.5
    assert 3.5 < errs[1] / errs[2] < 4.5


def test_oracle_stiffness_guard():
    g = GridSpec(16, 16)
    c = SpectralField.zeros(g)
    with pytest.raises(StiffnessError):
        oracle_step(c, 0.1, ModelParams(1, 0, 1), substeps=10)


def test_picard_error_is_second_order_in_nodes():
    g = GridSpec(8, 8)
    p = ModelParams(1.0, 0.0, 1.0)
    c = random_field(g, np.random.default_rng(5), scale=0.2)
    ref = oracle_step(c, 0.02, p, substeps=200)
    errs = []
    for K in (3, 5, 9):
        nodes, _ = picard_window(c, p, SolverConfig(window=0.02, nodes_per_window=K))
        errs.append(np.max(np.abs(nodes[-1].coeffs - ref.coeffs)))
    assert errs[0] / errs[1] > 3.0
    assert errs[1] / errs[2] > 3.0


def test_contraction_ratio_shrinks_with_window():
    g = GridSpec(16, 16)
    p = ModelParams(1.0, 0.5, 1.0)
    c = SpectralField.from_modes(g, {(1, 1): 5e-3, (2, 3): -5e-3j})
    ratios = [picard_window(c, p, SolverConfig(), delta=d)[1].contraction_ratio
              for d in (1e-2, 5e-3, 2.5e-3)]
    assert ratios[0] < 0.5
    assert ratios[0] > ratios[1] > ratios[2]


def test_large_data_fails_without_adaptation_and_recovers_with_it():
    g = GridSpec(8, 8)
    p = ModelParams(1.0, 0.0, 1.0)
    c = SpectralField.from_modes(g, {(1, 1): 40.0, (2, 2): 30j})
    with pytest.raises(ContractionFailure) as exc:
        picard_window(c, p, SolverConfig(window=0.5, picard_max_iter=8))
    assert exc.value.report is not None
    nodes, rep = picard_window(c, p, SolverConfig(window=0.5, picard_max_iter=8, adapt_window=True))
    assert rep.converged and rep.halvings > 0
    assert rep.window == pytest.approx(0.5 / 2**rep.halvings)


def test_contraction_failure_carries_partial_trajectory():
    g = GridSpec(8, 8)
    p = ModelParams(1.0, 0.0, 1.0)
    c = SpectralField.from_modes(g, {(1, 1): 0.02})
    cfg = SolverConfig(window=0.5, picard_max_iter=2, picard_tol=1e-15)
    with pytest.raises(ContractionFailure) as exc:
        solve(c, 1.0, p, cfg)
    assert exc.value.trajectory is not None
    assert len(exc.value.trajectory.snapshots) >= 1


def test_solve_rejects_nonpositive_span():
    g = GridSpec(8, 8)
    with pytest.raises(ConfigError):
        solve(SpectralField.zeros(g), 0.0, ModelParams(1, 0, 1), SolverConfig())


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
def test_trajectory_symmetry_and_zero_mean(seed, beta):
    g = GridSpec(8, 8)
    p = ModelParams(1.0, beta, 1.0)
    c = random_field(g, np.random.default_rng(seed), scale=0.05)
    traj = solve(c, 0.03, p, SolverConfig())
    assert check_trajectory_symmetry(traj) <= 1e-13
    for s in traj.snapshots:
        f = inverse_transform(s, p)
        assert np.max(np.abs(f.column_means())) < 1e-14


def test_pde_residual_small_along_trajectory():
    g = GridSpec(16, 16)
    p = ModelParams(1.0, 0.3, 1.0)
    c = SpectralField.from_modes(g, {(1, 1): 0.05, (2, 2): 0.03j})
    traj = solve(c, 0.02, p, SolverConfig(window=1e-3), record_nodes=False)
    res = pde_residual(traj, p)
    assert max(res) < 1e-5


def test_gauge_transform_solves_shifted_equation():
    g = GridSpec(16, 16)
    p = ModelParams(1.0, 0.3, 1.0)
    c = SpectralField.from_modes(g, {(1, 1): 0.05, (2, 2): 0.03j})
    traj = solve(c, 0.02, p, SolverConfig(window=1e-3))
    C0 = 0.7
    fields = [gauge_transform(inverse_transform(s, p), C0, s.time) for s in traj.snapshots]
    for f in fields:
        np.testing.assert_allclose(f.column_means(), C0, atol=1e-14)
    assert max(pde_residual_fields(fields, p)) < 1e-5
    # using the wrong drift breaks the equation
    wrong = [gauge_transform(inverse_transform(s, p), C0, 0.5 * s.time) for s in traj.snapshots]
    wrong = [PhysicalField(g, w.values, s.time) for w, s in zip(wrong, traj.snapshots)]
    assert max(pde_residual_fields(wrong, p)) > 1e-3


def test_solver_config_validation():
    with pytest.raises(ConfigError):
        SolverConfig(window=0.0)
    with pytest.raises(ConfigError):
        SolverConfig(nodes_per_window=1)
