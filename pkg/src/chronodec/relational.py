"""Relational probabilities: system outcomes conditioned on clock readings.

The joint system is ``clock (x) system`` with ``rho = rho_cl (x) rho_sys`` and
``H = H_cl (x) I + I (x) H_sys`` (no clock-system interaction). The parameter
``tau`` is unobservable and is integrated out by trapezoid quadrature on the
setup's ``tau_grid``, restricted to the window where the clock-window
probability ``Tr(P_T(tau) rho)`` exceeds ``WINDOW_REL_THRESHOLD`` times its
maximum.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import qalg
from .clock import ClockModel, mass_outside, reading_density, width
from .errors import NumericalError, ValidationError
from .evolve import unitary_step
from .qalg import DensityMatrix, HermitianOperator, Projector

WINDOW_REL_THRESHOLD = 1e-12
MIN_DENOMINATOR = 1e-14
MAX_MASS_OUTSIDE = 1e-6


class EmptyWindowWarning(UserWarning):
    pass


@dataclass(frozen=True)
class OutcomeWindow:
    center: float
    half_width: float

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValidationError(f"window half_width must be positive, got {self.half_width!r}")


@dataclass(frozen=True, eq=False)
class RelationalSetup:
    sys_hamiltonian: HermitianOperator
    clock_hamiltonian: HermitianOperator
    rho_sys: DensityMatrix
    rho_cl: DensityMatrix
    clock_pointer: HermitianOperator
    tau_grid: np.ndarray

    def __post_init__(self):
        grid = np.array(self.tau_grid, dtype=float)
        if grid.ndim != 1 or grid.size < 3 or np.any(np.diff(grid) <= 0):
            raise ValidationError("tau_grid needs at least 3 strictly ascending points")
        grid.setflags(write=False)
        object.__setattr__(self, "tau_grid", grid)
        d_s, d_c = self.sys_hamiltonian.dim, self.clock_hamiltonian.dim
        if self.rho_sys.dim != d_s or self.rho_cl.dim != d_c or self.clock_pointer.dim != d_c:
            raise qalg.DimensionError("setup dimensions do not conform")
        v = qalg.eigendecompose(self.clock_pointer).eigenvectors
        if np.abs(v @ v.conj().T - np.eye(d_c)).max() > 1e-10:
            raise ValidationError("clock pointer spectral projectors do not resolve the identity")

    @property
    def dims(self) -> tuple[int, int]:
        return self.clock_hamiltonian.dim, self.sys_hamiltonian.dim

    def total_hamiltonian(self) -> np.ndarray:
        d_c, d_s = self.dims
        return np.kron(self.clock_hamiltonian.matrix, np.eye(d_s)) + np.kron(
            np.eye(d_c), self.sys_hamiltonian.matrix
        )

    def total_state(self) -> np.ndarray:
        return np.kron(self.rho_cl.matrix, self.rho_sys.matrix)


def window_projector(obs, window: OutcomeWindow) -> Projector:
    """Spectral projector of ``obs`` onto eigenvalues in ``center +/- half_width``.

    An empty window yields the zero projector with ``empty=True`` and an
    :class:`EmptyWindowWarning`.
    """
    spectrum = qalg.eigendecompose(obs)
    m = qalg.as_matrix(obs)
    slack = 1e-12 * max(1.0, float(np.abs(m).max()))
    sel = np.abs(spectrum.eigenvalues - window.center) <= window.half_width + slack
    v = spectrum.eigenvectors[:, sel]
    p = v @ v.conj().T
    p = 0.5 * (p + p.conj().T)
    empty = not sel.any()
    if empty:
        warnings.warn(
            f"no eigenvalue inside window {window.center} +/- {window.half_width}",
            EmptyWindowWarning,
            stacklevel=2,
        )
    return Projector(HermitianOperator(p, getattr(obs, "units", "")), empty=empty)


def _heisenberg_traces(h: np.ndarray, rho: np.ndarray, op: np.ndarray, taus) -> np.ndarray:
    """``Tr(op U(tau) rho U(tau)^H)`` for every tau, ``U = exp(-i h tau)``."""
    spectrum = qalg.eigendecompose(h)
    w = spectrum.gaps()
    r = spectrum.to_eigenbasis(rho)
    a = spectrum.to_eigenbasis(op)
    coeff = (a.T * r).ravel()
    phases = np.exp(-1j * np.multiply.outer(np.asarray(taus, dtype=float), w.ravel()))
    return (phases @ coeff).real


def _system_projector(setup, obs, o_win):
    return window_projector(setup.sys_hamiltonian if obs is None else obs, o_win)


def joint_probability(
    setup: RelationalSetup,
    o_win: OutcomeWindow,
    t_win: OutcomeWindow,
    tau: float,
    observable=None,
) -> float:
    """``Tr(P_O(tau) P_T(tau) rho P_T(tau))`` on the full clock (x) system space.

    ``observable`` is the system observable windowed by ``o_win``; it defaults
    to the system Hamiltonian.
    """
    vals = _joint_traces(setup, o_win, t_win, np.array([float(tau)]), observable)
    return float(vals[0])


def _joint_traces(setup, o_win, t_win, taus, observable):
    d_c, d_s = setup.dims
    p_o = np.kron(np.eye(d_c), _system_projector(setup, observable, o_win).matrix)
    p_t = np.kron(window_projector(setup.clock_pointer, t_win).matrix, np.eye(d_s))
    # Tr(P_O P_T rho P_T) in the Heisenberg picture equals Tr(P_T P_O P_T rho(tau))
    op = p_t @ p_o @ p_t
    return _heisenberg_traces(setup.total_hamiltonian(), setup.total_state(), op, taus)


def _clock_traces(setup, t_win, taus):
    p_t = window_projector(setup.clock_pointer, t_win).matrix
    return _heisenberg_traces(setup.clock_hamiltonian.matrix, setup.rho_cl.matrix, p_t, taus)


def _window_quadrature(grid: np.ndarray, clock_vals: np.ndarray) -> np.ndarray:
    """Trapezoid weights on the part of the grid where the clock can read the window."""
    peak = float(clock_vals.max())
    if peak <= 0:
        return np.zeros_like(grid)
    inside = np.nonzero(clock_vals > WINDOW_REL_THRESHOLD * peak)[0]
    lo, hi = inside[0], inside[-1]
    q = np.zeros_like(grid)
    if hi == lo:
        return q
    dx = np.diff(grid[lo : hi + 1])
    q[lo:hi] += 0.5 * dx
    q[lo + 1 : hi + 1] += 0.5 * dx
    return q


def conditional_probability(
    setup: RelationalSetup,
    o_win: OutcomeWindow,
    t_win: OutcomeWindow,
    observable=None,
) -> float:
    """Probability of the system outcome window given the clock reading window.

    Ratio of the tau-integrated joint probability to the tau-integrated clock
    probability.
    """
    grid = setup.tau_grid
    denom_vals = _clock_traces(setup, t_win, grid) * np.trace(setup.rho_sys.matrix).real
    q = _window_quadrature(grid, denom_vals)
    denom = float(q @ denom_vals)
    if denom < MIN_DENOMINATOR:
        raise NumericalError("clock never reads this window on the tau grid")
    num = float(q @ _joint_traces(setup, o_win, t_win, grid, observable))
    p = num / denom
    if not -1e-10 <= p <= 1 + 1e-10:
        raise NumericalError(f"conditional probability {p!r} outside [0, 1]")
    return min(1.0, max(0.0, p))


def reading_weights(setup: RelationalSetup, t_win: OutcomeWindow) -> np.ndarray:
    """Quadrature weights of ``P_tau(T)`` on the tau grid for the microscopic clock.

    Non-negative and summing to 1; ``weights @ f(tau_grid)`` approximates
    ``integral dtau P_tau(T) f(tau)``.
    """
    vals = _clock_traces(setup, t_win, setup.tau_grid)
    q = _window_quadrature(setup.tau_grid, vals)
    w = q * np.clip(vals, 0.0, None)
    total = w.sum()
    if total < MIN_DENOMINATOR:
        raise NumericalError("clock never reads this window on the tau grid")
    return w / total


def mixture_state(setup: RelationalSetup, weights) -> DensityMatrix:
    """``sum_i w_i U_sys(tau_i) rho_sys U_sys(tau_i)^H`` for normalised weights ``w``."""
    w = np.asarray(weights, dtype=float)
    if w.shape != setup.tau_grid.shape or np.any(w < 0):
        raise ValidationError("weights must be non-negative and match tau_grid")
    w = w / w.sum()
    spectrum = qalg.eigendecompose(setup.sys_hamiltonian)
    gaps = spectrum.gaps()
    char = np.exp(-1j * np.multiply.outer(gaps, setup.tau_grid)) @ w
    r = spectrum.to_eigenbasis(setup.rho_sys) * char
    m = spectrum.from_eigenbasis(r)
    return DensityMatrix(0.5 * (m + m.conj().T), herm_tol=1e-10, trace_tol=1e-8, psd_tol=1e-10)


def effective_state(setup: RelationalSetup, clock: ClockModel, T: float) -> DensityMatrix:
    """System state seen at clock reading ``T``: the reading-density mixture of
    unitarily evolved states."""
    if clock.is_ideal:
        return unitary_step(setup.sys_hamiltonian, setup.rho_sys, T)
    grid = setup.tau_grid
    lost = mass_outside(clock, T, float(grid[0]), float(grid[-1]))
    if lost > MAX_MASS_OUTSIDE:
        half = 6.0 * math.sqrt(width(clock, T))
        raise NumericalError(
            f"tau grid too coarse: reading mass {lost:.3e} outside the grid; "
            f"need coverage of [{T - half!r}, {T + half!r}]"
        )
    dens = reading_density(clock, T, grid)
    q = _window_quadrature(grid, np.ones_like(grid))
    return mixture_state(setup, q * dens)


def ordinary_probability(h, rho, projector, T: float) -> float:
    """Schrodinger-picture probability ``Tr(P rho(T)) / Tr(rho(T))``."""
    rt = unitary_step(h, rho, T)
    return qalg.expectation(projector, rt) / float(np.trace(rt.matrix).real)


# -- presets -----------------------------------------------------------------


def qubit_hamiltonian(gap: float, axis: str = "z") -> HermitianOperator:
    """``(gap / 2) sigma_axis``; eigenvalues ``+/- gap / 2``."""
    pauli = {"x": qalg.SIGMA_X, "y": qalg.SIGMA_Y, "z": qalg.SIGMA_Z}[axis]
    return HermitianOperator(0.5 * gap * pauli, "energy")


@dataclass(frozen=True, eq=False)
class LadderClock:
    hamiltonian: HermitianOperator
    pointer: HermitianOperator
    state: DensityMatrix
    tick: float

    @property
    def period(self) -> float:
        return self.hamiltonian.dim * self.tick


def ladder_clock(dim: int, tick: float, spread: float | None = None) -> LadderClock:
    """Truncated ladder clock of ``dim`` equally spaced levels.

    The pointer's eigenstates are the discrete Fourier "time states"
    ``|theta_j>`` with readings ``j * tick``; evolution for one ``tick`` maps
    ``|theta_j>`` to ``|theta_{j+1}>``. The initial state is a wavepacket at
    reading 0 with a Gaussian energy envelope of standard deviation
    ``spread`` levels (``None`` puts it exactly in ``|theta_0>``).
    """
    if dim < 2 or not tick > 0:
        raise ValidationError("ladder clock needs dim >= 2 and tick > 0")
    n = np.arange(dim)
    omega = 2 * math.pi / (dim * tick)
    h = np.diag((n - (dim - 1) / 2) * omega).astype(complex)
    dft = np.exp(-2j * math.pi * np.outer(n, n) / dim) / math.sqrt(dim)  # column j is |theta_j>
    pointer = dft @ np.diag(n * tick) @ dft.conj().T
    if spread is None:
        amp = np.ones(dim)
    else:
        amp = np.exp(-((n - (dim - 1) / 2) ** 2) / (4 * spread**2))
    state = DensityMatrix.from_pure(amp)
    return LadderClock(
        HermitianOperator(h, "energy"),
        HermitianOperator(0.5 * (pointer + pointer.conj().T), "time"),
        state,
        tick,
    )
