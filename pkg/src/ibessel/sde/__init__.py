"""Stochastic integration of the interacting particle SDEs."""

from .core import (
    BACKEND,
    EnsembleResult,
    Model,
    ParticleConfig,
    SimulationConfig,
    available_backends,
    drift_bessel,
    drift_dyson,
    run_ensemble,
    step,
)

__all__ = [
    "BACKEND",
    "EnsembleResult",
    "Model",
    "ParticleConfig",
    "SimulationConfig",
    "available_backends",
    "drift_bessel",
    "drift_dyson",
    "run_ensemble",
    "step",
]
