"""Interference noise and secret-key rates for quantum channels sharing a fiber
with classical WDM traffic."""

from . import fiber, interference, qkd, scenario
from .errors import (CoexistError, ConfigurationError, ContractError, DomainError,
                     GeometryError, IntegrationError)
from .fiber import FiberProfile, default_fiber
from .interference import Channel, ChannelPlan, Direction, NoiseBreakdown, propagate_ode, total_noise
from .scenario import Protocol, QkdConfig, Scenario, SweepResult, reference_scenario

__version__ = "0.1.0"

__all__ = [
    "Channel",
    "ChannelPlan",
    "CoexistError",
    "ConfigurationError",
    "ContractError",
    "Direction",
    "DomainError",
    "FiberProfile",
    "GeometryError",
    "IntegrationError",
    "NoiseBreakdown",
    "Protocol",
    "QkdConfig",
    "Scenario",
    "SweepResult",
    "default_fiber",
    "fiber",
    "interference",
    "propagate_ode",
    "qkd",
    "reference_scenario",
    "scenario",
    "total_noise",
]
