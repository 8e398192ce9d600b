"""Exception types raised by the package."""

from __future__ import annotations


class GeodesicSpreadError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(GeodesicSpreadError, ValueError):
    """A configuration or argument lies outside its valid domain."""


class DimensionMismatchError(GeodesicSpreadError, ValueError):
    """A spread state does not have the dimension of the oscillator ensemble."""


class SingularKineticEnergyError(GeodesicSpreadError, ArithmeticError):
    """Kinetic energy fell to or below the floor where the Jacobi metric degenerates.

    Attributes
    ----------
    kinetic : float
        The offending kinetic-energy value (smallest seen, for integrations).
    time : float
        Time at which the floor was hit.
    """

    def __init__(self, kinetic: float, time: float, floor: float | None = None):
        self.kinetic = kinetic
        self.time = time
        self.floor = floor
        msg = f"kinetic energy {kinetic:.6g} at t={time:.6g}"
        if floor is not None:
            msg += f" is at or below the floor {floor:.6g}"
        super().__init__(msg)


class NonFiniteStateError(GeodesicSpreadError, ArithmeticError):
    """An integration step produced a non-finite component."""


class ZeroNormStateError(GeodesicSpreadError, ZeroDivisionError):
    """Renormalization was requested for a state of zero norm."""


class InsufficientSeriesError(GeodesicSpreadError, ValueError):
    """A convergence series is too short for the requested diagnostic."""
