"""Closed-form uncertainty bounds and event-condition formulas.

All functions are pure. Quantities carry the units of the supplied
:class:`PhysicalConstants`; natural units set ``hbar = c = 1`` and
``l_planck = t_planck`` with a tunable ``t_planck``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import constants as _codata

from .clock import ClockModel, width
from .errors import DomainError, ValidationError

# sqrt(2) / (sqrt(pi) * 2^(1/3))
REVERSAL_PREFACTOR = math.sqrt(2) / (math.sqrt(math.pi) * 2 ** (1 / 3))


@dataclass(frozen=True)
class PhysicalConstants:
    G: float
    hbar: float
    c: float
    t_planck: float
    l_planck: float
    units: str = "natural"

    def __post_init__(self):
        if self.units not in ("SI", "natural"):
            raise ValidationError(f"unknown unit system {self.units!r}")
        for name in ("G", "hbar", "c", "t_planck", "l_planck"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValidationError(f"constant {name} must be positive, got {v!r}")
        if self.units == "SI":
            expected = math.sqrt(self.hbar * self.G / self.c**5)
            if abs(self.t_planck - expected) / self.t_planck > 1e-6:
                raise ValidationError("t_planck inconsistent with sqrt(hbar G / c^5)")

    @classmethod
    def si(cls) -> PhysicalConstants:
        G, hbar, c = _codata.G, _codata.hbar, _codata.c
        return cls(G, hbar, c, math.sqrt(hbar * G / c**5), math.sqrt(hbar * G / c**3), "SI")

    @classmethod
    def natural(cls, t_planck: float = 1.0) -> PhysicalConstants:
        """hbar = c = 1 with a free Planck time; G follows from t_P^2 = hbar G / c^5."""
        return cls(t_planck**2, 1.0, 1.0, t_planck, t_planck, "natural")

    @property
    def time_unit(self) -> str:
        return "s" if self.units == "SI" else "natural"

    def schwarzschild_radius(self, energy: float) -> float:
        return 2 * self.G * energy / self.c**4


@dataclass(frozen=True)
class ClockDilationQuery:
    t_c: float
    delta_t_c: float
    r: float
    r_s: float
    delta_r_s: float

    def __post_init__(self):
        if min(self.delta_t_c, self.delta_r_s) < 0:
            raise ValidationError("uncertainties must be non-negative")
        if not self.r_s > 0 or not self.r > 0:
            raise ValidationError("r and r_s must be positive")


@dataclass(frozen=True)
class GaussianSuperposition:
    """``a |phi_1> + b |phi_2>`` with Gaussian peaks at ``+/- L/2`` of width ``sigma``."""

    a: complex
    b: complex
    L: float
    sigma: float
    delta_L: float = 0.0
    delta_sigma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", complex(self.b))
        norm = abs(self.a) ** 2 + abs(self.b) ** 2
        if abs(norm - 1) > 1e-12:
            raise ValidationError(f"|a|^2 + |b|^2 = {norm!r}, expected 1")
        if not (self.L > 0 and self.sigma > 0):
            raise ValidationError("L and sigma must be positive")
        if self.delta_L < 0 or self.delta_sigma < 0:
            raise ValidationError("uncertainties must be non-negative")


def dilated_uncertainty(q: ClockDilationQuery) -> float:
    """Far-observer period uncertainty by error propagation through time dilation."""
    if q.r_s >= q.r:
        raise DomainError("clock inside Schwarzschild radius")
    f = 1 - q.r_s / q.r
    var = 0.25 * q.t_c**2 * q.delta_r_s**2 / (f**3 * q.r**2) + q.delta_t_c**2 / f
    return math.sqrt(var)


def dilation_lower_envelope(t: float, delta_t_c: float, constants: PhysicalConstants) -> float:
    """Lower bound on the far-observer uncertainty for a given local uncertainty.

    Uses ``Delta E Delta t_c >= hbar``, ``r_S = 2GE/c^4``, drops the dilation
    factors and bounds the clock size by ``r < c Delta t_c / (2 pi)``.
    Minimising over ``delta_t_c`` gives :func:`min_time_uncertainty`.
    """
    if not (t > 0 and delta_t_c > 0):
        raise DomainError("t and delta_t_c must be positive")
    G, hbar, c = constants.G, constants.hbar, constants.c
    r_max = c * delta_t_c / (2 * math.pi)
    var = (t * G * hbar) ** 2 / (r_max**2 * c**8 * delta_t_c**2) + delta_t_c**2
    return math.sqrt(var)


def min_time_uncertainty(t: float, constants: PhysicalConstants) -> float:
    """Fundamental minimum uncertainty of a time interval ``t``."""
    if not t > 0:
        raise DomainError(f"elapsed time must be positive, got {t!r}")
    return math.sqrt(3) * math.pi ** (1 / 3) * t ** (1 / 3) * constants.t_planck ** (2 / 3)


def decay_factor(omega: float, T: float, constants: PhysicalConstants) -> float:
    """Optimal-clock damping ``exp(-omega^2 t_P^(4/3) T^(2/3))`` of an off-diagonal element."""
    if not T >= 0:
        raise DomainError(f"T must be >= 0, got {T!r}")
    return math.exp(-(omega**2) * width(ClockModel.optimal(constants.t_planck), T))


def momentum_discriminator(g: GaussianSuperposition, hbar: float = 1.0) -> float:
    """``Tr[p rho_1(0)]`` for the two-peak superposition; zero for the mixture."""
    cross = g.a * g.b.conjugate() - g.a.conjugate() * g.b  # purely imaginary
    val = -1j * hbar * cross * g.L / (4 * g.sigma**2) * math.exp(-(g.L**2) / (8 * g.sigma**2))
    return float(val.real)


def preparation_uncertainty(g: GaussianSuperposition, hbar: float = 1.0) -> float:
    """Lower bound ``sqrt(2) |Tr[p rho_1(0)]| Delta L / L`` on the discriminator's uncertainty."""
    return math.sqrt(2) * abs(momentum_discriminator(g, hbar)) * g.delta_L / g.L


def reversal_prefactor(tau_D: float, T: float, constants: PhysicalConstants) -> float:
    """Suppression of a coherence witness after forward-and-reversed evolution of ``T`` each."""
    if not T > 0:
        raise DomainError(f"T must be positive, got {T!r}")
    if not tau_D > 0:
        raise DomainError(f"tau_D must be positive, got {tau_D!r}")
    return REVERSAL_PREFACTOR * tau_D / (constants.t_planck ** (2 / 3) * T ** (1 / 3))


def distinguishability_bound(
    tau_D: float, T: float, constants: PhysicalConstants, baseline: float
) -> float:
    return reversal_prefactor(tau_D, T, constants) * baseline


def event_time(tau_D: float, L: float, constants: PhysicalConstants) -> float:
    """Time after which events can occur for a superposition of separation ``L``."""
    if not (tau_D > 0 and L > 0):
        raise DomainError("tau_D and L must be positive")
    tp, lp = constants.t_planck, constants.l_planck
    return tau_D**3 * L**2 / (2 * (2 * math.pi) ** 1.5 * tp**2 * lp**2)


def event_condition_satisfied(decayed_discriminator: float, prep_uncertainty: float) -> bool:
    if prep_uncertainty < 0:
        raise DomainError("preparation uncertainty must be non-negative")
    return bool(abs(decayed_discriminator) <= prep_uncertainty)


def minimize_dilation_envelope(t: float, constants: PhysicalConstants) -> tuple[float, float]:
    """Numerically minimise :func:`dilation_lower_envelope` over ``delta_t_c``.

    Returns ``(delta_t_c_opt, value)``; independent of the closed form.
    """
    from scipy.optimize import minimize_scalar

    guess = (t * constants.t_planck**2) ** (1 / 3)
    res = minimize_scalar(
        lambda s: dilation_lower_envelope(t, guess * math.exp(s), constants) / guess,
        bracket=(-2.0, 0.0, 2.0),
        tol=1e-12,
    )
    x = guess * math.exp(res.x)
    return x, dilation_lower_envelope(t, x, constants)


UNITS = {
    "dilated_uncertainty": "time",
    "min_time_uncertainty": "time",
    "decay_factor": "dimensionless",
    "momentum_discriminator": "momentum",
    "preparation_uncertainty": "momentum",
    "distinguishability_bound": "observable",
    "event_time": "time",
    "event_condition_satisfied": "boolean",
}
