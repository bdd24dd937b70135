"""Exception types raised across the package."""


class SklscError(Exception):
    """Base class for all package errors."""


class GridMismatchError(SklscError, ValueError):
    """Fields or operators defined on different grids were combined."""


class InvalidFieldError(SklscError, ValueError):
    """A field violates its invariants (non-finite values, wrong shape)."""


class InvalidBaseDataError(SklscError, ValueError):
    """Prescribed base curvature violates the Kahler or balanced constraint."""


class UnsupportedMetricError(SklscError, ValueError):
    """The metric is outside the conformally flat family handled here."""


class SolverFailure(SklscError, RuntimeError):
    """The eigensolver did not converge or produced a non-positive ground state.

    ``diagnostics`` holds ``key: value`` pairs describing the last iterate.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})

    def report(self):
        return "\n".join(f"{k}: {v}" for k, v in self.diagnostics.items())


class DegenerateKappaError(SklscError, ValueError):
    """The scaling constant lies in the excluded band around (2n-1)/n."""


class BracketError(SklscError, ValueError):
    """A root bracket does not enclose a sign change."""


class InvalidEigenfunctionError(SklscError, ValueError):
    """An eigenfunction handed to the conformal reconstruction is not positive."""


class ExpressionSyntaxError(SklscError, ValueError):
    """Malformed field expression; carries 1-based ``line`` and ``column``."""

    def __init__(self, message, line, column):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class ConfigError(SklscError, ValueError):
    """Scenario configuration could not be loaded or validated."""
