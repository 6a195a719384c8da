"""Shortcuts to adiabaticity for the radial state of a charged particle in a Penning trap.

Design a magnetic-field ramp from a polynomial auxiliary length, check it
against the Ermakov equation and direct Schroedinger propagation, and study
its robustness to systematic field errors.
"""

from .eigenstates import ModeIndex, Units, NATURAL
from .errors import DomainError, InfeasibleProtocol, NumericalError, SpeedLimitViolation
from .fields import FieldProtocol, ProtocolParams, speed_limit
from .trajectory import Trajectory, paper_polynomial, with_free_params

__all__ = [
    "DomainError",
    "FieldProtocol",
    "InfeasibleProtocol",
    "ModeIndex",
    "NATURAL",
    "NumericalError",
    "ProtocolParams",
    "SpeedLimitViolation",
    "Trajectory",
    "Units",
    "paper_polynomial",
    "speed_limit",
    "with_free_params",
]

__version__ = "0.1.0"
