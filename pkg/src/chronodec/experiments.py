"""Desk-scale reproductions of the three measurement scenarios.

* spin-bath revivals and their suppression by clock-induced decoherence,
* the time-reversal protocol distinguishing a superposition from a mixture,
* the event scan for a two-peak Gaussian superposition.

Each ``run_*`` returns a :class:`Table` whose columns are serialised by the CLI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

import numpy as np

from . import bounds, qalg
from .bounds import GaussianSuperposition, PhysicalConstants
from .clock import ClockModel, width_increment
from .errors import ValidationError
from .evolve import EvolutionSpec, StepControl, analytic_reversal, reversed_evolution
from .qalg import DensityMatrix, HermitianOperator

DEFAULT_NOISE_FLOOR = 1e-3


@dataclass
class Table:
    columns: list
    rows: list
    scalars: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])


# -- spin bath ---------------------------------------------------------------


@dataclass(frozen=True)
class SpinBathConfig:
    """Central spin dephased by ``n_spins`` bath spins.

    ``H = (w0/2) s_z + sum_k g_k s_z (x) s_z^(k)`` with the bath prepared in
    ``prod_k |+>_k``; the system coherence factor is ``prod_k cos(2 g_k t)``.
    """

    n_spins: int
    couplings: tuple
    system_gap: float = 1.0
    clock: ClockModel = field(default_factory=ClockModel.ideal)
    t_max: float = 10.0
    n_samples: int = 512
    noise_floor: float = DEFAULT_NOISE_FLOOR

    def __post_init__(self):
        g = tuple(float(x) for x in self.couplings)
        object.__setattr__(self, "couplings", g)
        if self.n_spins < 1 or len(g) != self.n_spins:
            raise ValidationError("couplings must have one entry per bath spin (n_spins >= 1)")
        if any(x == 0 for x in g):
            raise ValidationError("couplings must be nonzero")
        if self.n_samples < 2:
            raise ValidationError("n_samples must be >= 2")
        if not self.t_max > 0:
            raise ValidationError("t_max must be positive")


def bath_coherence(couplings, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.ones_like(t)
    for g in couplings:
        out = out * np.cos(2 * g * t)
    return out


def clock_suppression(clock: ClockModel, gap: float, t) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    db = np.array([width_increment(clock, 0.0, x) for x in t])
    return np.exp(-(gap**2) * db)


def revival_time(couplings, max_denominator: int = 10_000) -> float:
    """First full revival ``pi / g0`` of commensurate couplings ``g_k = n_k g0``."""
    fracs = [Fraction(abs(g)).limit_denominator(max_denominator) for g in couplings]
    den = reduce(math.lcm, (f.denominator for f in fracs))
    g0 = Fraction(reduce(math.gcd, (int(f * den) for f in fracs)), den)
    return math.pi / float(g0)


def run_spin_bath(cfg: SpinBathConfig) -> Table:
    t = np.linspace(0.0, cfg.t_max, cfg.n_samples)
    unitary = bath_coherence(cfg.couplings, t)
    real = unitary * clock_suppression(cfg.clock, cfg.system_gap, t)
    rows = [[float(a), float(b), float(c)] for a, b, c in zip(t, unitary, real)]
    table = Table(["t", "coherence_unitary", "coherence_realclock"], rows)
    try:
        t_rev = revival_time(cfg.couplings)
    except (ValueError, ZeroDivisionError):
        return table
    at_rev = float(bath_coherence(cfg.couplings, t_rev) * clock_suppression(cfg.clock, cfg.system_gap, t_rev)[0])
    table.scalars.update(
        revival_time=t_rev,
        revival_unitary=float(bath_coherence(cfg.couplings, t_rev)),
        revival_realclock=at_rev,
        revival_hidden=bool(abs(at_rev) <= cfg.noise_floor),
    )
    return table


# -- time reversal -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ReversalConfig:
    hamiltonian: HermitianOperator
    rho_pure: DensityMatrix
    observable: HermitianOperator
    clock: ClockModel
    T_list: tuple
    tau_D: float = 1.0
    constants: PhysicalConstants = field(default_factory=PhysicalConstants.natural)
    method: str = "master"
    step_control: StepControl = field(default_factory=StepControl)

    def __post_init__(self):
        d = self.hamiltonian.dim
        if d < 2 or self.rho_pure.dim != d or self.observable.dim != d:
            raise ValidationError("hamiltonian, state and observable dimensions must agree (>= 2)")
        if abs(self.rho_pure.purity - 1) > 1e-10:
            raise ValidationError("rho_pure must be a pure state")
        ts = tuple(float(x) for x in self.T_list)
        if not ts or ts[0] <= 0 or any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValidationError("T_list must be ascending and positive")
        object.__setattr__(self, "T_list", ts)
        if self.method not in ("master", "analytic"):
            raise ValidationError(f"unknown method {self.method!r}")

    @property
    def system_dim(self) -> int:
        return self.hamiltonian.dim


def run_reversal(cfg: ReversalConfig) -> Table:
    spectrum = qalg.eigendecompose(cfg.hamiltonian)
    rho_mix = qalg.dephase(cfg.rho_pure, spectrum)
    baseline = qalg.expectation(cfg.observable, cfg.rho_pure) - qalg.expectation(cfg.observable, rho_mix)
    rows = []
    for T in cfg.T_list:
        if cfg.method == "analytic":
            pure = analytic_reversal(cfg.hamiltonian, cfg.clock, cfg.rho_pure, T)
            mix = analytic_reversal(cfg.hamiltonian, cfg.clock, rho_mix, T)
        else:
            spec = EvolutionSpec(cfg.hamiltonian, cfg.clock, 0.0, 2 * T, cfg.step_control)
            pure = reversed_evolution(spec, cfg.rho_pure, T)
            mix = reversed_evolution(spec, rho_mix, T)
        rows.append(
            [
                T,
                qalg.expectation(cfg.observable, pure),
                qalg.expectation(cfg.observable, mix),
                bounds.distinguishability_bound(cfg.tau_D, T, cfg.constants, baseline),
            ]
        )
    return Table(["T", "witness_pure", "witness_mixture", "bound"], rows, {"baseline": baseline})


# -- event scan --------------------------------------------------------------


@dataclass(frozen=True)
class EventConfig:
    superposition: GaussianSuperposition
    tau_D: float
    constants: PhysicalConstants
    T_scan: tuple

    def __post_init__(self):
        ts = tuple(float(x) for x in self.T_scan)
        if not ts:
            raise ValidationError("T_scan must be nonempty")
        if ts[0] <= 0 or any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValidationError("T_scan must be ascending and positive")
        object.__setattr__(self, "T_scan", ts)


def run_event_scan(cfg: EventConfig) -> Table:
    g, k = cfg.superposition, cfg.constants
    disc = abs(bounds.momentum_discriminator(g, k.hbar))
    prep = bounds.preparation_uncertainty(g, k.hbar)
    rows = []
    flip = None
    for T in cfg.T_scan:
        decayed = disc * bounds.reversal_prefactor(cfg.tau_D, T, k)
        flag = bounds.event_condition_satisfied(decayed, prep)
        if flag and flip is None:
            flip = T
        rows.append([T, decayed, prep, flag])
    scalars = {
        "tau_event": bounds.event_time(cfg.tau_D, g.L, k),
        "flip_time": flip,
        "discriminator": disc,
    }
    return Table(["T", "decayed_discriminator", "prep_uncertainty", "event_flag"], rows, scalars)
