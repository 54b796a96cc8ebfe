"""Exception taxonomy shared across the toolkit.

The split mirrors the process exit codes of the command line tool:
configuration problems (exit 2), capacity guards (exit 3), and everything
else that surfaces as a failed check rather than an exception.
"""


class WedgelabError(Exception):
    """Base class for all toolkit errors."""


class StructuralError(WedgelabError):
    """Rank/shape/leg bookkeeping violation (programming error in a caller)."""


class DomainError(WedgelabError):
    """Evaluation requested outside the declared domain of a function."""


class InsufficientDomainError(DomainError):
    """A strip-level identity was requested from data only known on the real line."""


class ParameterError(WedgelabError):
    """A builder parameter is outside its admissible range.

    ``residual`` optionally carries the numerical evidence behind a rejection.
    """

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class SchemaError(WedgelabError):
    """A model document violates the configuration schema.

    ``field`` carries a dotted path like ``sides.plus.parameters.blocks[0]``.
    """

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class CapacityError(WedgelabError):
    """A requested tensor or operator exceeds the desk-scale resource limits."""


class PreconditionError(WedgelabError):
    """An operation's mathematical precondition failed a numerical check.

    ``residuals`` maps check names to the offending residual values.
    """

    def __init__(self, message, residuals=None):
        self.residuals = dict(residuals or {})
        super().__init__(message)


class QuadratureError(WedgelabError):
    """Adaptive quadrature failed to converge; ``achieved`` records the estimate."""

    def __init__(self, message, achieved=None):
        self.achieved = achieved
        super().__init__(message)
