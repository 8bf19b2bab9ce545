"""Exception hierarchy shared by the library and the command line driver."""


class NeuromimeticError(Exception):
    """Base class for every error raised by this package."""


class RankError(NeuromimeticError):
    """Raised when a matrix that must have full rank does not."""


class InfeasibleInvariance(NeuromimeticError):
    """Raised when an invariant lifted solution cannot be built for an index set."""


class LatticeError(NeuromimeticError):
    """Raised for channel sets outside a resilience lattice or too large to enumerate."""


class ScheduleError(NeuromimeticError):
    """Raised when a dropout schedule has gaps, overlaps or illegal channel sets."""


class EnumerationLimit(NeuromimeticError):
    """Raised when a combinatorial enumeration would exceed its hard cap."""


class DegenerateScores(NeuromimeticError):
    """Raised when iterative learning has nothing to discriminate."""


class DivergenceError(NeuromimeticError):
    """Raised when the Q network produces non-finite values or an exploding loss."""


class ConvergenceError(NeuromimeticError):
    """Raised when a learner exhausts its episode budget.

    The ``diagnostics`` attribute carries whatever the learner recorded so far.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InvariantViolation(NeuromimeticError):
    """Raised when a post-condition check on a computed result fails."""
