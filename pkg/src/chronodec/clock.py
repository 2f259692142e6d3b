"""Physical clock models.

A clock is summarised by the width ``b(T)`` of its reading distribution, its
spread rate ``sigma(T) = db/dT`` and the reading density ``P_tau(T)`` itself.
Widths are in time^2 units, rates in time units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError, ValidationError


class ClockKind(str, Enum):
    IDEAL = "ideal"
    GAUSSIAN = "gaussian"
    OPTIMAL = "optimal"


@dataclass(frozen=True)
class ClockModel:
    kind: ClockKind
    b0: float = 0.0
    rate: float = 0.0
    t_planck: float = 0.0

    def __post_init__(self):
        kind = ClockKind(self.kind)
        object.__setattr__(self, "kind", kind)
        for name in ("b0", "rate", "t_planck"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValidationError(f"clock parameter {name} must be finite")
            object.__setattr__(self, name, v)
        if kind is ClockKind.GAUSSIAN and (self.b0 < 0 or self.rate < 0):
            raise ValidationError("gaussian clock needs b0 >= 0 and rate >= 0 (clocks never sharpen)")
        if kind is ClockKind.OPTIMAL and self.t_planck <= 0:
            raise ValidationError("optimal clock needs t_planck > 0")

    @classmethod
    def ideal(cls) -> ClockModel:
        return cls(ClockKind.IDEAL)

    @classmethod
    def gaussian(cls, b0: float, rate: float) -> ClockModel:
        return cls(ClockKind.GAUSSIAN, b0=b0, rate=rate)

    @classmethod
    def optimal(cls, t_planck: float) -> ClockModel:
        return cls(ClockKind.OPTIMAL, t_planck=t_planck)

    @property
    def is_ideal(self) -> bool:
        return self.kind is ClockKind.IDEAL

    def to_dict(self) -> dict:
        if self.kind is ClockKind.IDEAL:
            return {"kind": "ideal"}
        if self.kind is ClockKind.GAUSSIAN:
            return {"kind": "gaussian", "b0": self.b0, "rate": self.rate}
        return {"kind": "optimal", "t_planck": self.t_planck}


def _check_time(T) -> float:
    T = float(T)
    if not (T >= 0) or not math.isfinite(T):
        raise DomainError(f"clock time must be finite and >= 0, got {T!r}")
    return T


def width(clock: ClockModel, T: float) -> float:
    """Width ``b(T)`` of the clock reading distribution."""
    T = _check_time(T)
    if clock.kind is ClockKind.IDEAL:
        return 0.0
    if clock.kind is ClockKind.GAUSSIAN:
        return clock.b0 + clock.rate * T
    # chosen so that exp(-omega^2 b(T)) is the optimal-clock decay law
    return clock.t_planck ** (4 / 3) * T ** (2 / 3)


def width_increment(clock: ClockModel, t0: float, t1: float) -> float:
    """``b(t1) - b(t0)``, the integral of the spread rate over ``[t0, t1]``.

    Finite even where the pointwise rate diverges (optimal clock at 0).
    """
    if clock.kind is ClockKind.OPTIMAL:
        t0, t1 = _check_time(t0), _check_time(t1)
        return clock.t_planck ** (4 / 3) * (t1 ** (2 / 3) - t0 ** (2 / 3))
    return width(clock, t1) - width(clock, t0)


def spread_rate(clock: ClockModel, T: float) -> float:
    """``sigma(T) = db/dT``. Singular at ``T = 0`` for the optimal clock."""
    if clock.kind is ClockKind.IDEAL:
        return 0.0
    if clock.kind is ClockKind.GAUSSIAN:
        _check_time(T)
        return clock.rate
    T = float(T)
    if not T > 0:
        raise DomainError(f"optimal clock spread rate needs T > 0, got {T!r}")
    return (2 / 3) * clock.t_planck ** (4 / 3) * T ** (-1 / 3)


def reading_density(clock: ClockModel, T: float, tau):
    """Probability density that the clock reads ``T`` at parameter time ``tau``.

    Gaussian in ``T - tau`` with variance ``b(T)``. Accepts scalar or array ``tau``.
    """
    if clock.kind is ClockKind.IDEAL:
        raise DomainError("ideal clock is a delta distribution")
    b = width(clock, T)
    if b <= 0:
        raise DomainError(f"reading density needs width(T) > 0, got {b!r} at T={T!r}")
    x = np.asarray(tau, dtype=float) - T
    out = np.exp(-0.5 * x * x / b) / math.sqrt(2 * math.pi * b)
    return float(out) if out.ndim == 0 else out


def mass_outside(clock: ClockModel, T: float, lo: float, hi: float) -> float:
    """Reading-density probability mass outside ``[lo, hi]``."""
    if clock.kind is ClockKind.IDEAL:
        return 0.0 if lo <= T <= hi else 1.0
    s = math.sqrt(2 * width(clock, T))
    return 0.5 * math.erfc((T - lo) / s) + 0.5 * math.erfc((hi - T) / s)
