import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chronodec import qalg
from chronodec.clock import ClockModel
from chronodec.errors import DomainError, IntegrationError, ValidationError
from chronodec.evolve import (
    EvolutionSpec,
    StepControl,
    analytic_eigenbasis,
    analytic_reversal,
    evolve_master,
    reversed_evolution,
    unitary_step,
)
from chronodec.qalg import SIGMA_X, SIGMA_Z, DensityMatrix, HermitianOperator

HZ = HermitianOperator(SIGMA_Z)
PLUS = DensityMatrix.from_pure([1, 1])
OPT = ClockModel.optimal(0.1)
# 0.5 * exp(-4 * 0.1^(4/3) * 8^(2/3)), evaluated with mpmath at 30 digits
RHO01_T8 = 0.237924616247684174888580792593
DAMP_T8 = 0.475849232495368349777161585185


def test_unitary_step_identity_and_phase():
    assert np.abs(unitary_step(HZ, PLUS, 0.0).matrix - PLUS.matrix).max() < 1e-15
    out = unitary_step(HZ, PLUS, math.pi / 2)
    # closed form rho01(t) = rho01(0) exp(-i w t), w = E0 - E1 = 2
    assert abs(out.matrix[0, 1] - 0.5 * np.exp(-1j * 2 * math.pi / 2)) < 1e-12
    assert abs(out.matrix[0, 1] - (-0.5)) < 1e-12


def test_unitary_step_reversible_and_spectrum_preserving(rng):
    h = qalg.random_hermitian(5, rng)
    rho = qalg.random_density_matrix(5, rng)
    fwd = unitary_step(h, rho, 1.7)
    assert np.abs(unitary_step(h, fwd, -1.7).matrix - rho.matrix).max() < 1e-10
    assert abs(np.trace(fwd.matrix) - 1) < 1e-10
    assert np.abs(np.linalg.eigvalsh(fwd.matrix) - np.linalg.eigvalsh(rho.matrix)).max() < 1e-10


def test_evolution_spec_validation():
    with pytest.raises(ValidationError):
        EvolutionSpec(HZ, OPT, 2.0, 1.0)
    with pytest.raises(ValidationError):
        StepControl(rel_tol=0.1)


def test_ideal_clock_matches_unitary(rng):
    h = qalg.random_hermitian(4, rng)
    rho = qalg.random_density_matrix(4, rng)
    times = np.linspace(0, 5, 11)
    traj = evolve_master(EvolutionSpec(h, ClockModel.ideal(), 0, 5), rho, times)
    for t, s in zip(times, traj.states):
        assert np.abs(s.matrix - unitary_step(h, rho, t).matrix).max() < 1e-8


def test_energy_diagonal_state_is_fixed_point():
    h = HermitianOperator(np.diag([0.0, 1.0, 3.0]))
    rho = DensityMatrix(np.diag([0.2, 0.3, 0.5]).astype(complex))
    traj = evolve_master(EvolutionSpec(h, OPT, 0, 10), rho, [2.0, 10.0])
    for s in traj.states:
        assert np.abs(s.matrix - rho.matrix).max() < 1e-12


def test_decay_law_example():
    traj = evolve_master(EvolutionSpec(HZ, OPT, 0, 8), PLUS, [8.0])
    assert abs(traj.states[-1].matrix[0, 1]) == pytest.approx(RHO01_T8, rel=1e-8)


def test_analytic_examples():
    assert np.abs(analytic_eigenbasis(HZ, OPT, PLUS, 0.0).matrix - PLUS.matrix).max() < 1e-15
    out = analytic_eigenbasis(HZ, OPT, PLUS, 8.0)
    assert abs(out.matrix[0, 1]) / 0.5 == pytest.approx(DAMP_T8, rel=1e-12)
    rng = np.random.default_rng(3)
    h = qalg.random_hermitian(4, rng)
    rho = qalg.random_density_matrix(4, rng)
    spec = qalg.eigendecompose(h)
    before = np.diag(spec.to_eigenbasis(rho))
    after = np.diag(spec.to_eigenbasis(analytic_eigenbasis(h, OPT, rho, 7.0)))
    assert np.abs(before - after).max() < 1e-12


@settings(max_examples=15, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    d=st.integers(2, 6),
    optimal=st.booleans(),
    T=st.floats(0.5, 10.0),
)
def test_master_matches_analytic_oracle(seed, d, optimal, T):
    rng = np.random.default_rng(seed)
    h = qalg.random_hermitian(d, rng, 0.5)
    rho = qalg.random_density_matrix(d, rng)
    clock = ClockModel.optimal(0.15) if optimal else ClockModel.gaussian(0.05, 0.04)
    times = [T / 3, T]
    traj = evolve_master(EvolutionSpec(h, clock, 0, T), rho, times)
    for t, s in zip(times, traj.states):
        assert np.abs(s.matrix - analytic_eigenbasis(h, clock, rho, t).matrix).max() < 1e-6


def test_nonzero_start_time_uses_width_increment(rng):
    h = qalg.random_hermitian(3, rng)
    rho = qalg.random_density_matrix(3, rng)
    traj = evolve_master(EvolutionSpec(h, OPT, 2.0, 6.0), rho, [6.0])
    ref = analytic_eigenbasis(h, OPT, rho, 6.0, t_start=2.0)
    assert np.abs(traj.states[-1].matrix - ref.matrix).max() < 1e-8


def test_trajectory_invariants(rng):
    h = qalg.random_hermitian(4, rng)
    rho = qalg.random_density_matrix(4, rng, rank=1)
    times = np.linspace(0, 10, 51)
    traj = evolve_master(EvolutionSpec(h, ClockModel.gaussian(0.0, 0.05), 0, 10), rho, times)
    energy0 = qalg.expectation(h, rho)
    for s in traj.states:
        assert abs(np.trace(s.matrix) - 1) < 1e-8
        assert qalg.hermiticity_error(s.matrix) < 1e-9
        assert abs(qalg.expectation(h, s) - energy0) < 1e-8
    assert np.all(np.diff(traj.purity) <= 1e-8)
    assert np.all(np.diff(traj.coherence_l1) <= 1e-8)
    assert len(traj.rows()) == len(times)
    assert len(traj.columns()) == len(traj.rows()[0])


def test_sample_times_validation():
    spec = EvolutionSpec(HZ, OPT, 0, 1)
    with pytest.raises(ValidationError):
        evolve_master(spec, PLUS, [0.5, 0.2])
    with pytest.raises(ValidationError):
        evolve_master(spec, PLUS, [2.0])


def test_step_underflow_reports_last_good_time():
    h = HermitianOperator(1e9 * SIGMA_X)
    spec = EvolutionSpec(h, ClockModel.ideal(), 0, 1, StepControl(max_steps=50))
    with pytest.raises(IntegrationError, match="last good time"):
        evolve_master(spec, DensityMatrix.from_pure([1, 0]), [1.0])


def test_reversed_evolution_examples():
    spec = EvolutionSpec(HZ, ClockModel.ideal(), 0, 8)
    assert np.abs(reversed_evolution(spec, PLUS, 4.0).matrix - PLUS.matrix).max() < 1e-8
    diag = DensityMatrix(np.diag([0.3, 0.7]).astype(complex))
    spec = EvolutionSpec(HZ, OPT, 0, 8)
    assert np.abs(reversed_evolution(spec, diag, 4.0).matrix - diag.matrix).max() < 1e-12
    out = reversed_evolution(spec, PLUS, 4.0)
    assert abs(out.matrix[0, 1].imag) < 1e-9
    assert out.matrix[0, 1].real == pytest.approx(RHO01_T8, rel=1e-8)
    with pytest.raises(DomainError):
        reversed_evolution(spec, PLUS, 0.0)


def test_reversal_matches_analytic(rng):
    h = qalg.random_hermitian(3, rng, 0.5)
    rho = qalg.random_density_matrix(3, rng, rank=1)
    spec = EvolutionSpec(h, OPT, 0, 10)
    num = reversed_evolution(spec, rho, 3.0)
    assert np.abs(num.matrix - analytic_reversal(h, OPT, rho, 3.0).matrix).max() < 1e-8


def test_reversal_approaches_dephased_state(rng):
    h = qalg.random_hermitian(3, rng)
    rho = qalg.random_density_matrix(3, rng, rank=1)
    target = qalg.dephase(rho, qalg.eigendecompose(h))
    clock = ClockModel.optimal(0.3)
    dists = [qalg.trace_distance(analytic_reversal(h, clock, rho, T), target) for T in (1, 10, 100, 1000)]
    assert all(b < a for a, b in zip(dists, dists[1:]))
    assert dists[-1] < 1e-3
