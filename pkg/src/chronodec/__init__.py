"""Quantum evolution measured by real, gravitationally limited clocks."""

__version__ = "0.1.0"

from .clock import ClockModel, reading_density, spread_rate, width
from .evolve import (
    EvolutionSpec,
    StepControl,
    TrajectoryRecord,
    analytic_eigenbasis,
    evolve_master,
    reversed_evolution,
    unitary_step,
)
from .qalg import (
    DensityMatrix,
    EnergySpectrum,
    HermitianOperator,
    Projector,
    eigendecompose,
    expectation,
    partial_trace,
    tensor,
    trace_distance,
)

__all__ = [
    "ClockModel",
    "DensityMatrix",
    "EnergySpectrum",
    "EvolutionSpec",
    "HermitianOperator",
    "Projector",
    "StepControl",
    "TrajectoryRecord",
    "analytic_eigenbasis",
    "eigendecompose",
    "evolve_master",
    "expectation",
    "partial_trace",
    "reading_density",
    "reversed_evolution",
    "spread_rate",
    "tensor",
    "trace_distance",
    "unitary_step",
    "width",
]
