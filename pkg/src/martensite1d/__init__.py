"""
One-dimensional simulator for a coupled elliptic-parabolic model of
martensitic phase transitions driven by configurational forces.

The order parameter ``S`` evolves by a degenerate parabolic equation
regularized with ``|S_x|_k = sqrt(S_x^2 + k^2)``; displacement and stress
solve quasi-static linear elasticity with misfit strain ``misfit * S`` and
are obtained in closed form.  Diagnostics turn the energy, maximum-principle
and viscosity-solution properties into runtime checks, and a sharp-interface
integrator provides a reference for the diffuse fronts.
"""

from .config import Config, default_config, load_config, make_model, parse_config
from .diagnostics import DiagnosticsReport, viscosity_check
from .elasticity import ElasticSolution, fd_elastic_oracle, solve_correction, solve_elastic
from .errors import (
    CflViolation,
    ConfigError,
    IncompatibleData,
    InterfaceExit,
    LevelSetLost,
    Martensite1DError,
    NoConvergence,
    NonFiniteState,
    NonPositiveDefinite,
    SingularSystem,
)
from .evolution import CoupledModel, RunConfig, State, run, step
from .grid import Grid1D
from .material import DoubleWell, MaterialParams
from .sharp_interface import SharpState, advance_interface, sharp_elastic
from .tensor_core import ElasticityTensor, build_projection, sym

__version__ = "0.1.0"

__all__ = [
    "CflViolation",
    "Config",
    "ConfigError",
    "CoupledModel",
    "DiagnosticsReport",
    "DoubleWell",
    "ElasticSolution",
    "ElasticityTensor",
    "Grid1D",
    "IncompatibleData",
    "InterfaceExit",
    "LevelSetLost",
    "MaterialParams",
    "Martensite1DError",
    "NoConvergence",
    "NonFiniteState",
    "NonPositiveDefinite",
    "RunConfig",
    "SharpState",
    "SingularSystem",
    "State",
    "advance_interface",
    "build_projection",
    "default_config",
    "fd_elastic_oracle",
    "load_config",
    "make_model",
    "parse_config",
    "run",
    "sharp_elastic",
    "solve_correction",
    "solve_elastic",
    "step",
    "sym",
    "viscosity_check",
]
