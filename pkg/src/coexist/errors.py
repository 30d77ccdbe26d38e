"""Exception hierarchy shared by all modules."""


class CoexistError(Exception):
    """Base class for errors raised by this package."""


class DomainError(CoexistError, ValueError):
    """An argument lies outside the range where a model is defined."""


class GeometryError(CoexistError, ValueError):
    """Fiber geometry does not describe a guiding waveguide."""


class ContractError(CoexistError, ValueError):
    """Inputs violate a structural precondition (phase matching, symmetry...)."""


class ConfigurationError(CoexistError, ValueError):
    """Scenario or channel plan is inconsistent."""


class IntegrationError(CoexistError, RuntimeError):
    """Numerical ODE integration failed to converge."""
