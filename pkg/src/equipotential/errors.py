"""Exception hierarchy shared by every module."""


class EquipotentialError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(EquipotentialError, ValueError):
    """A point or radius lies outside the reference domain of the map."""


class ValidationError(EquipotentialError, ValueError):
    """A map or shape description is malformed or not univalent."""


class ResolutionError(EquipotentialError, ValueError):
    """The sample count is too small to resolve the spectrum of the map."""


class KindError(EquipotentialError, ValueError):
    """An operation was given an exterior object where interior was needed (or vice versa)."""


class UnivalenceLost(EquipotentialError):
    """Raised by the Hele-Shaw stepper when the evolved map stops being univalent.

    ``last_state`` holds the last accepted state, ``diagnostic`` the failed verdict.
    """

    def __init__(self, message, last_state=None, diagnostic=None):
        super().__init__(message)
        self.last_state = last_state
        self.diagnostic = diagnostic
