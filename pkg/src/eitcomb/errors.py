"""Exception hierarchy for the simulator.

Errors that carry diagnostic payloads (offending time intervals, required
grid extensions, ...) expose them as attributes so callers can react
programmatically instead of parsing messages.
"""
from __future__ import annotations


class EitError(Exception):
    """Base class for all simulator errors."""


class InvalidArgumentError(EitError, ValueError):
    """A parameter violates a documented precondition or invariant."""


class GridResolutionError(InvalidArgumentError):
    """The time grid cannot resolve a requested modulation frequency."""


class ResolutionError(InvalidArgumentError):
    """A spectral resolution bandwidth is below the achievable resolution."""


class ZeroEnergyError(InvalidArgumentError):
    """An operation received a field with no energy where energy is required."""


class ModeMismatchError(EitError):
    """Probe power is present where the control field is absent.

    ``intervals`` lists the offending ``(t_lo, t_hi)`` local-time spans.
    """

    def __init__(self, intervals, message=None):
        self.intervals = list(intervals)
        if message is None:
            message = (
                "probe present where control is absent on intervals "
                f"{self.intervals}"
            )
        super().__init__(message)


class WindowOverrunError(EitError):
    """The pulse does not fit inside the simulation time window.

    ``required_extension`` estimates the extra window duration (s) needed.
    """

    def __init__(self, required_extension, message=None):
        self.required_extension = float(required_extension)
        if message is None:
            message = (
                "pulse leaves the simulation window; extend the time grid by "
                f"at least {self.required_extension:.3e} s"
            )
        super().__init__(message)


class DivergenceError(EitError):
    """The integrator produced non-finite amplitudes."""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = dict(diagnostics or {})
        super().__init__(message)


class ContainmentError(EitError):
    """The polariton is not fully inside the cell when storage starts.

    ``span`` is the computed ``(z_min, z_max)`` polariton extent in metres.
    """

    def __init__(self, span, message=None):
        self.span = tuple(span)
        if message is None:
            message = (
                "polariton not contained in the cell at switch-off; spatial "
                f"span {self.span} m"
            )
        super().__init__(message)


class LinewidthError(EitError):
    """A transmission linewidth could not be resolved from the scan."""


class ScenarioError(EitError):
    """A scenario config failed validation; ``field`` names the bad entry."""

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(message)
