"""Exception types raised by the solvers and drivers."""


class Martensite1DError(Exception):
    """Base class for all package errors."""


class NonPositiveDefinite(Martensite1DError):
    """A matrix that must be symmetric positive definite is not."""


class SingularSystem(Martensite1DError):
    """A linear system could not be assembled or solved."""


class CflViolation(Martensite1DError):
    """Explicit step requested above the monotonicity limit."""


class NoConvergence(Martensite1DError):
    """Inner fixed-point iteration hit its iteration cap."""


class IncompatibleData(Martensite1DError):
    """Initial data violate the Dirichlet condition."""


class InterfaceExit(Martensite1DError):
    """Tracked interface left the admissible part of the domain."""


class LevelSetLost(Martensite1DError):
    """No S = 1/2 crossing found in a diffuse frame."""


class ConfigError(Martensite1DError):
    """Malformed or inadmissible configuration."""


class NonFiniteState(Martensite1DError):
    """NaN or Inf appeared in a monitored quantity."""
