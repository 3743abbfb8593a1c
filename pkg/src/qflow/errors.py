"""Exception hierarchy shared by all modules.

Domain errors map to CLI exit code 2, convergence failures to exit code 3.
"""


class QflowError(Exception):
    """Base class for library errors."""


class DomainError(QflowError, ValueError):
    """Input outside the supported domain (bad netlist, invalid parameters)."""


class NetlistSyntaxError(DomainError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class SingularMatrixError(DomainError):
    """A capacitance matrix that must be invertible is not."""


class UnresolvableConstraintError(DomainError):
    """A singular variable could not be eliminated by any implemented rule."""


class CommensurabilityError(DomainError):
    """A finite-shift operator does not fit the requested grid."""


class ConvergenceError(QflowError, RuntimeError):
    """A numerical procedure did not reach its tolerance."""


class GridResolutionError(ConvergenceError):
    """Grid refinement did not converge an eigenvalue."""
