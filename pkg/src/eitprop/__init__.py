"""Transient electromagnetically induced transparency: single-atom, Maxwell-Bloch and Doppler-averaged models."""

__version__ = "0.1.0"

from .atomic import IntegratorConfig, LindbladSet, evolve, steady_state
from .doppler import VelocityEnsemble, build_ensemble, eit_spectrum
from .drive import DriveProtocol, Envelope
from .errors import (
    ConfigError,
    DimensionError,
    EitPropError,
    GridRefinementError,
    IntegrationError,
    NoUniqueSteadyStateError,
    OutputError,
    ParameterError,
    ScenarioError,
    ZeroFieldError,
)
from .propagation import PropagationGrid, propagate
from .response import AtomSpec, calibrate_od, resonant_od
from .scenarios import REGISTRY, ScenarioConfig, compare, preset, run

__all__ = [
    "AtomSpec",
    "ConfigError",
    "DimensionError",
    "DriveProtocol",
    "EitPropError",
    "Envelope",
    "GridRefinementError",
    "IntegrationError",
    "IntegratorConfig",
    "LindbladSet",
    "NoUniqueSteadyStateError",
    "OutputError",
    "ParameterError",
    "PropagationGrid",
    "REGISTRY",
    "ScenarioConfig",
    "ScenarioError",
    "VelocityEnsemble",
    "ZeroFieldError",
    "build_ensemble",
    "calibrate_od",
    "compare",
    "eit_spectrum",
    "evolve",
    "preset",
    "propagate",
    "resonant_od",
    "run",
    "steady_state",
]
