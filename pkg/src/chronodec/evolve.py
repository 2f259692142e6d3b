"""Time evolution of density matrices parameterised by a real clock.

The real-clock master equation is

    d rho / dT = -i [H, rho] - sigma(T) [H, [H, rho]]

with ``sigma = db/dT`` taken from a :class:`~chronodec.clock.ClockModel`
(hbar = 1). In the energy basis each element obeys
``d rho_mn / dT = (-i w_mn - sigma w_mn^2) rho_mn``, so off-diagonal terms
decay as ``exp(-w_mn^2 b(T))``; :func:`analytic_eigenbasis` evaluates that
closed form and serves as the oracle for :func:`evolve_master`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import qalg
from .clock import ClockModel, width_increment
from .errors import DomainError, IntegrationError, ValidationError
from .qalg import DensityMatrix, HermitianOperator

# validation tolerances for states produced by the integrator
TRAJ_HERM_TOL = 1e-9
TRAJ_TRACE_TOL = 1e-8
TRAJ_PSD_TOL = 1e-8
UNSTABLE_PSD = -1e-6


@dataclass(frozen=True)
class StepControl:
    initial_step: float = 1e-3
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_steps: int = 1_000_000

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            v = getattr(self, name)
            if not (0 < v <= 1e-2):
                raise ValidationError(f"{name} must lie in (0, 1e-2], got {v!r}")
        if not self.initial_step > 0:
            raise ValidationError("initial_step must be positive")


@dataclass(frozen=True, eq=False)
class EvolutionSpec:
    hamiltonian: HermitianOperator
    clock: ClockModel
    t_start: float = 0.0
    t_end: float = 1.0
    step_control: StepControl = field(default_factory=StepControl)

    def __post_init__(self):
        if not (0 <= self.t_start < self.t_end) or not math.isfinite(self.t_end):
            raise ValidationError(
                f"need 0 <= t_start < t_end, got t_start={self.t_start!r}, t_end={self.t_end!r}"
            )


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    times: np.ndarray
    states: tuple
    purity: np.ndarray
    coherence_l1: np.ndarray
    n_steps: int = 0

    def __len__(self):
        return len(self.times)

    def columns(self) -> list[str]:
        d = self.states[0].dim
        cols = ["t", "trace", "purity", "coherence_l1"]
        for i in range(d):
            for j in range(d):
                cols += [f"rho_{i}_{j}_re", f"rho_{i}_{j}_im"]
        return cols

    def rows(self) -> list[list[float]]:
        out = []
        for t, s, p, c in zip(self.times, self.states, self.purity, self.coherence_l1):
            row = [float(t), float(np.trace(s.matrix).real), float(p), float(c)]
            for z in s.matrix.ravel():
                row += [float(z.real), float(z.imag)]
            out.append(row)
        return out


def _trajectory_state(m: np.ndarray) -> DensityMatrix:
    return DensityMatrix(m, herm_tol=TRAJ_HERM_TOL, trace_tol=TRAJ_TRACE_TOL, psd_tol=TRAJ_PSD_TOL)


def _like(rho, m: np.ndarray) -> DensityMatrix:
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(m, herm_tol=rho.herm_tol, trace_tol=rho.trace_tol, psd_tol=rho.psd_tol)
    return DensityMatrix(m)


def propagator(h, dt: float) -> np.ndarray:
    """``exp(-i H dt)`` via the eigendecomposition of ``H``."""
    spec = qalg.eigendecompose(h)
    v = spec.eigenvectors
    return (v * np.exp(-1j * spec.eigenvalues * dt)) @ v.conj().T


def unitary_step(h, rho, dt: float) -> DensityMatrix:
    """``rho -> U rho U^H`` with ``U = exp(-i H dt)``; ``dt`` may be negative."""
    dt = float(dt)
    if not math.isfinite(dt):
        raise DomainError("dt must be finite")
    hm, r = qalg.as_matrix(h), qalg.as_matrix(rho)
    if hm.shape != r.shape:
        raise qalg.DimensionError(f"hamiltonian {hm.shape} and state {r.shape} differ in dimension")
    u = propagator(hm, dt)
    return _like(rho, u @ r @ u.conj().T)


def master_rhs(h: np.ndarray, rho: np.ndarray, sigma: float) -> np.ndarray:
    """Right-hand side ``-i[H, rho] - sigma [H, [H, rho]]``."""
    c = h @ rho - rho @ h
    out = -1j * c
    if sigma:
        out -= sigma * (h @ c - c @ h)
    return out


# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def _dp_step(h: np.ndarray, y: np.ndarray, dt: float, sigma: float):
    k = []
    for i in range(7):
        yi = y
        for a, kj in zip(_A[i], k):
            if a:
                yi = yi + (dt * a) * kj
        k.append(master_rhs(h, yi, sigma))
    y5 = y + dt * sum(b * kj for b, kj in zip(_B5, k) if b)
    err = dt * sum(e * kj for e, kj in zip(_E, k) if e)
    return y5, err


def evolve_master(
    spec: EvolutionSpec,
    rho0,
    sample_times: Sequence[float],
    on_step: Optional[Callable[[float, np.ndarray], None]] = None,
) -> TrajectoryRecord:
    """Integrate the real-clock master equation and sample the state.

    Adaptive Dormand-Prince 5(4) with a max-norm error estimate. Within each
    step the spread rate is frozen at ``(b(t+h) - b(t)) / h``: the unitary and
    dissipative generators commute, so the exact flow over the step depends on
    the rate only through that increment, and the ``T^(-1/3)`` singularity of
    the optimal clock at 0 never has to be evaluated.

    ``on_step(t, rho)`` is called after every accepted step.
    """
    h = qalg.as_matrix(spec.hamiltonian)
    y = np.array(qalg.as_matrix(rho0))
    if y.shape != h.shape:
        raise qalg.DimensionError(f"hamiltonian {h.shape} and state {y.shape} differ in dimension")
    ts = np.asarray(sample_times, dtype=float)
    if ts.ndim != 1 or ts.size == 0:
        raise ValidationError("sample_times must be a non-empty 1-D array")
    if np.any(np.diff(ts) < 0) or ts[0] < spec.t_start or ts[-1] > spec.t_end:
        raise ValidationError("sample_times must be ascending and inside [t_start, t_end]")

    ctl = spec.step_control
    clock = spec.clock
    energy = qalg.eigendecompose(h)
    t = spec.t_start
    dt = ctl.initial_step
    n_steps = 0
    states = []

    for target in ts:
        while t < target:
            span = target - t
            if dt >= span or span - dt < 1e-12 * max(1.0, abs(target)):
                dt_try, t_new = span, target
            else:
                dt_try, t_new = dt, t + dt
            sigma = 0.0 if clock.is_ideal else width_increment(clock, t, t_new) / dt_try
            y_new, err = _dp_step(h, y, dt_try, sigma)
            scale = ctl.abs_tol + ctl.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err_norm = float(np.max(np.abs(err) / scale))
            if not math.isfinite(err_norm):
                raise IntegrationError("non-finite error estimate", last_good_time=t)
            if err_norm <= 1.0:
                t, y = t_new, y_new
                n_steps += 1
                if n_steps > ctl.max_steps:
                    raise IntegrationError("maximum number of steps exceeded", last_good_time=t)
                lam_min = float(np.linalg.eigvalsh(0.5 * (y + y.conj().T))[0])
                if lam_min < UNSTABLE_PSD:
                    raise IntegrationError(
                        f"integration unstable: eigenvalue {lam_min:.3e}", last_good_time=t
                    )
                if on_step is not None:
                    on_step(t, y)
                factor = 5.0 if err_norm == 0 else min(5.0, 0.9 * err_norm ** -0.2)
                # keep the step learnt before a clipped landing on a sample time
                dt = max(dt, dt_try * factor) if dt_try < dt else dt_try * factor
            else:
                dt = dt_try * max(0.2, 0.9 * err_norm ** -0.2)
            if dt < 1e-14 * max(1.0, abs(t)):
                raise IntegrationError("step size underflow", last_good_time=t)
        states.append(_trajectory_state(y.copy()))

    return TrajectoryRecord(
        times=ts.copy(),
        states=tuple(states),
        purity=np.array([s.purity for s in states]),
        coherence_l1=np.array([qalg.coherence_l1(s, energy) for s in states]),
        n_steps=n_steps,
    )


def analytic_eigenbasis(h, clock: ClockModel, rho0, T: float, t_start: float = 0.0) -> DensityMatrix:
    """Closed-form solution for time-independent ``H``.

    ``rho_mn(T) = rho_mn(t0) exp(-i w_mn (T - t0)) exp(-w_mn^2 (b(T) - b(t0)))``
    in the energy basis, with ``t0 = t_start``.
    """
    if not T >= t_start:
        raise DomainError(f"need T >= t_start, got T={T!r}")
    spectrum = qalg.eigendecompose(h)
    w = spectrum.gaps()
    db = width_increment(clock, t_start, T)
    r = spectrum.to_eigenbasis(rho0)
    r = r * np.exp(-1j * w * (T - t_start) - w * w * db)
    return _like(rho0, spectrum.from_eigenbasis(r))


def reversed_evolution(spec: EvolutionSpec, rho0, T: float) -> DensityMatrix:
    """Evolve for clock time ``T`` under ``H`` and then for ``T`` under ``-H``.

    The clock keeps running through the reversed leg, so the dissipator (even
    in ``H``) acts over the full elapsed time ``2T``.
    """
    if not T > 0:
        raise DomainError(f"reversal time must be positive, got {T!r}")
    t0 = spec.t_start
    fwd = EvolutionSpec(spec.hamiltonian, spec.clock, t0, t0 + T, spec.step_control)
    mid = evolve_master(fwd, rho0, [t0 + T]).states[-1]
    back = EvolutionSpec(-spec.hamiltonian, spec.clock, t0 + T, t0 + 2 * T, spec.step_control)
    return evolve_master(back, mid, [t0 + 2 * T]).states[-1]


def analytic_reversal(h, clock: ClockModel, rho0, T: float, t_start: float = 0.0) -> DensityMatrix:
    """Closed form of :func:`reversed_evolution`: phases cancel, damping uses ``b`` over ``2T``."""
    if not T > 0:
        raise DomainError(f"reversal time must be positive, got {T!r}")
    spectrum = qalg.eigendecompose(h)
    w = spectrum.gaps()
    db = width_increment(clock, t_start, t_start + 2 * T)
    r = spectrum.to_eigenbasis(rho0) * np.exp(-w * w * db)
    return _like(rho0, spectrum.from_eigenbasis(r))
