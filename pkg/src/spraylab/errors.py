"""Exception types shared across spraylab."""

from __future__ import annotations


class SprayLabError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SprayLabError):
    """An operand left the domain of an operation (division by ~0, sqrt/ln of a
    non-positive value part, abs straddling zero, ...)."""


class OrderError(SprayLabError):
    """A derivative was requested beyond the truncation order of a jet."""


class SpraySyntaxError(SprayLabError):
    """Parse failure in a .spray source, with position and expectation info."""

    def __init__(self, line: int, col: int, expected: str, found: str = ""):
        self.line = line
        self.col = col
        self.expected = expected
        self.found = found
        msg = f"line {line}, col {col}: expected {expected}"
        if found:
            msg += f", found {found!r}"
        super().__init__(msg)


class DimensionError(SprayLabError):
    """A variable index or component count is inconsistent with the declared dim."""


class ArityError(SprayLabError):
    """Wrong number of arguments to a function call in an expression."""


class DegenerateMetric(SprayLabError):
    """The fundamental tensor g_ij = L_{.i.j}/2 is numerically singular at a point."""


class NegativeMetric(SprayLabError):
    """A construction needing F = sqrt(L) met a non-positive L value."""


class RankError(SprayLabError):
    """A linear system used for a fit does not have full rank (e.g. the y-samples
    of a weak-isotropy fit fail to span)."""


class PathError(SprayLabError):
    """A quadrature path left the admissible region (a guard went non-positive)."""


class ParamError(SprayLabError):
    """Invalid parameters for a generator (family constraints violated)."""


class PreconditionError(SprayLabError):
    """The mathematical precondition of a decision procedure does not hold."""


class SamplingError(SprayLabError):
    """The rejection sampler exhausted its attempt budget before collecting the
    requested number of admissible points."""


class UnknownFixture(SprayLabError):
    """No fixture with the requested name is registered."""
