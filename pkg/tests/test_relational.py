import warnings

import numpy as np
import pytest

from chronodec import qalg
from chronodec import relational as R
from chronodec.clock import ClockModel
from chronodec.errors import NumericalError, ValidationError
from chronodec.evolve import unitary_step
from chronodec.qalg import SIGMA_Z, DensityMatrix, HermitianOperator
from chronodec.relational import OutcomeWindow, RelationalSetup

Z = HermitianOperator(SIGMA_Z)
FULL = OutcomeWindow(0.0, 100.0)
UP = OutcomeWindow(1.0, 0.5)


def make_setup(dim=16, tick=0.02, spread=2.0, points=4001, rho_sys=None, gap=2.0):
    lc = R.ladder_clock(dim, tick, spread)
    hs = R.qubit_hamiltonian(gap, "x")
    rs = rho_sys if rho_sys is not None else DensityMatrix.from_pure([1, 0])
    grid = np.linspace(0.0, lc.period, points)
    return RelationalSetup(hs, lc.hamiltonian, rs, lc.state, lc.pointer, grid), lc


def test_setup_validation():
    lc = R.ladder_clock(4, 0.1)
    with pytest.raises(ValidationError):
        RelationalSetup(Z, lc.hamiltonian, DensityMatrix.from_pure([1, 0]), lc.state, lc.pointer, [0, 1])
    with pytest.raises(ValidationError):
        OutcomeWindow(0.0, 0.0)


def test_ladder_clock_ticks():
    lc = R.ladder_clock(8, 0.1)
    spec = qalg.eigendecompose(lc.pointer)
    assert np.allclose(spec.eigenvalues, 0.1 * np.arange(8))
    # one tick moves the pointer reading by exactly one step
    moved = unitary_step(lc.hamiltonian, lc.state, 0.3)
    assert qalg.expectation(R.window_projector(lc.pointer, OutcomeWindow(0.3, 0.01)), moved) == pytest.approx(1.0)


def test_window_projector_examples():
    assert np.abs(R.window_projector(Z, FULL).matrix - np.eye(2)).max() < 1e-15
    p = R.window_projector(Z, UP)
    assert np.abs(p.matrix - np.diag([1, 0])).max() < 1e-15
    assert np.abs(qalg.commutator(p, Z)).max() < 1e-15
    rng = np.random.default_rng(1)
    u = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
    h = HermitianOperator(u @ np.diag([0.0, 1.0, 2.0, 3.0]) @ u.conj().T)
    p = R.window_projector(h, OutcomeWindow(1.5, 0.6))
    # trace equals the number of enclosed eigenvalues (1 and 2)
    assert p.rank == 2
    assert abs(np.trace(p.matrix) - 2) < 1e-12


def test_window_projector_empty_flags():
    with pytest.warns(R.EmptyWindowWarning):
        p = R.window_projector(Z, OutcomeWindow(5.0, 0.1))
    assert p.empty and np.abs(p.matrix).max() == 0


def test_joint_probability_trivial_cases():
    setup, lc = make_setup(dim=8, tick=0.05, points=101)
    assert R.joint_probability(setup, FULL, FULL, 0.37, observable=Z) == pytest.approx(1.0, abs=1e-12)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", R.EmptyWindowWarning)
        assert R.joint_probability(setup, OutcomeWindow(7.0, 0.1), FULL, 0.37, observable=Z) == 0


def test_joint_probability_factorises_for_product_states():
    lc = R.ladder_clock(2, 0.5, None)
    hs = R.qubit_hamiltonian(1.3, "x")
    rs = DensityMatrix.from_pure([0.6, 0.8])
    setup = RelationalSetup(hs, lc.hamiltonian, rs, lc.state, lc.pointer, np.linspace(0, 1, 5))
    t_win = OutcomeWindow(0.0, 0.1)
    p_o = R.window_projector(Z, UP)
    p_t = R.window_projector(lc.pointer, t_win)
    for tau in (0.0, 0.21, 0.8):
        sys_part = qalg.expectation(p_o, unitary_step(hs, rs, tau))
        clock_part = qalg.expectation(p_t, unitary_step(lc.hamiltonian, lc.state, tau))
        joint = R.joint_probability(setup, UP, t_win, tau, observable=Z)
        assert joint == pytest.approx(sys_part * clock_part, abs=1e-12)


def test_conditional_probability_trivial_cases():
    setup, lc = make_setup(dim=8, tick=0.05, points=401)
    t_win = OutcomeWindow(0.2, 0.025)
    assert R.conditional_probability(setup, FULL, t_win, observable=Z) == pytest.approx(1.0, abs=1e-12)
    # eigenstate of H_sys and O = H_sys eigenprojector containing it
    plus = DensityMatrix.from_pure([1, 1])
    setup2, _ = make_setup(dim=8, tick=0.05, points=401, rho_sys=plus)
    hs = setup2.sys_hamiltonian
    p = R.conditional_probability(setup2, OutcomeWindow(1.0, 0.1), t_win, observable=hs)
    assert p == pytest.approx(1.0, abs=1e-12)


def test_conditional_probability_unreachable_window():
    lc = R.ladder_clock(4, 0.1, None)
    setup = RelationalSetup(Z, lc.hamiltonian, DensityMatrix.from_pure([1, 0]), lc.state, lc.pointer, [0.0, 1e-4, 2e-4])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", R.EmptyWindowWarning)
        with pytest.raises(NumericalError, match="never reads"):
            R.conditional_probability(setup, UP, OutcomeWindow(10.0, 0.01), observable=Z)


def test_near_ideal_clock_recovers_ordinary_probability():
    setup, lc = make_setup()
    p_up = R.window_projector(Z, UP)
    for j in range(2, 14):
        T0 = j * lc.tick
        cond = R.conditional_probability(setup, UP, OutcomeWindow(T0, lc.tick / 2), observable=Z)
        ordinary = R.ordinary_probability(setup.sys_hamiltonian, setup.rho_sys, p_up, T0)
        assert cond == pytest.approx(ordinary, abs=1e-3)


def test_conditional_probability_invariant_under_rescaling():
    setup, lc = make_setup(dim=8, tick=0.05, points=801)
    t_win = OutcomeWindow(0.25, 0.025)
    base = R.conditional_probability(setup, UP, t_win, observable=Z)
    scaled = object.__new__(RelationalSetup)
    for name in ("sys_hamiltonian", "clock_hamiltonian", "rho_sys", "clock_pointer", "tau_grid"):
        object.__setattr__(scaled, name, getattr(setup, name))
    # unnormalised clock state: rho -> 3.7 rho
    object.__setattr__(scaled, "rho_cl", type("M", (), {"matrix": 3.7 * setup.rho_cl.matrix})())
    assert R.conditional_probability(scaled, UP, t_win, observable=Z) == pytest.approx(base, abs=1e-13)


def test_conditional_probability_grid_refinement():
    setup, lc = make_setup(points=2001)
    fine, _ = make_setup(points=4001)
    t_win = OutcomeWindow(8 * lc.tick, lc.tick / 2)
    a = R.conditional_probability(setup, UP, t_win, observable=Z)
    b = R.conditional_probability(fine, UP, t_win, observable=Z)
    assert abs(a - b) < 1e-6


def test_effective_state_ideal_and_stationary():
    setup, _ = make_setup(points=101)
    ideal = R.effective_state(setup, ClockModel.ideal(), 0.13)
    assert np.abs(ideal.matrix - unitary_step(setup.sys_hamiltonian, setup.rho_sys, 0.13).matrix).max() < 1e-8
    plus = DensityMatrix.from_pure([1, 1])
    grid = np.linspace(-10, 20, 3001)
    stationary = RelationalSetup(setup.sys_hamiltonian, setup.clock_hamiltonian, plus, setup.rho_cl, setup.clock_pointer, grid)
    out = R.effective_state(stationary, ClockModel.gaussian(0.5, 0.1), 5.0)
    assert np.abs(out.matrix - plus.matrix).max() < 1e-12


def test_effective_state_gaussian_characteristic_function():
    hz = HermitianOperator(SIGMA_Z)
    plus = DensityMatrix.from_pure([1, 1])
    lc = R.ladder_clock(2, 1.0)
    b, T = 0.3, 2.5
    grid = np.linspace(T - 10, T + 10, 4001)
    setup = RelationalSetup(hz, lc.hamiltonian, plus, lc.state, lc.pointer, grid)
    out = R.effective_state(setup, ClockModel.gaussian(b, 0.0), T)
    w = 2.0  # E0 - E1 for sigma_z
    expected = 0.5 * np.exp(-1j * w * T - w**2 * b / 2)
    assert abs(out.matrix[0, 1] - expected) < 1e-6
    assert abs(np.trace(out.matrix) - 1) < 1e-8


def test_effective_state_grid_too_coarse():
    hz = HermitianOperator(SIGMA_Z)
    lc = R.ladder_clock(2, 1.0)
    setup = RelationalSetup(hz, lc.hamiltonian, DensityMatrix.from_pure([1, 1]), lc.state, lc.pointer, np.linspace(0, 3, 31))
    with pytest.raises(NumericalError, match="need coverage"):
        R.effective_state(setup, ClockModel.gaussian(1.0, 0.0), 2.5)


def test_effective_state_is_convex_mixture():
    setup, _ = make_setup(points=2001, rho_sys=DensityMatrix.from_pure([0.6, 0.8j]))
    grid = np.linspace(-20, 20, 4001)
    wide = RelationalSetup(setup.sys_hamiltonian, setup.clock_hamiltonian, setup.rho_sys, setup.rho_cl, setup.clock_pointer, grid)
    for T in (0.5, 2.0, 5.0):
        out = R.effective_state(wide, ClockModel.optimal(0.7), T)
        assert out.purity <= setup.rho_sys.purity + 1e-10
        assert np.linalg.eigvalsh(out.matrix)[0] >= -1e-12


def test_mixture_of_microscopic_readings_reproduces_conditional_probability():
    # 2-level system (x) 8-level clock, product state
    setup, lc = make_setup(dim=8, tick=0.05, points=801, rho_sys=DensityMatrix.from_pure([0.8, 0.6]))
    p_up = R.window_projector(Z, UP)
    for j in (2, 4, 5):
        t_win = OutcomeWindow(j * lc.tick, lc.tick / 2)
        weights = R.reading_weights(setup, t_win)
        assert abs(weights.sum() - 1) < 1e-12
        rho_T = R.mixture_state(setup, weights)
        cond = R.conditional_probability(setup, UP, t_win, observable=Z)
        assert qalg.expectation(p_up, rho_T) == pytest.approx(cond, abs=1e-10)
