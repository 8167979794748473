"""Exception hierarchy for design construction, evaluation and optimization."""

from __future__ import annotations


class DesignError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameter(DesignError, ValueError):
    """A size, kind or option argument is out of range or unrecognized."""


class ConstraintViolation(DesignError):
    """A weight matrix breaks one of the design constraints.

    Parameters
    ----------
    constraint : str
        Which constraint failed: ``"shape"``, ``"nonnegativity"``,
        ``"escalation"`` or ``"cohort-size"``.
    indices : tuple
        Location of the offending entry.  Treatment indices are 0-based
        (0 is placebo), cohort indices are 1-based as in the I/O formats.
    magnitude : float
        Size of the violation.
    """

    def __init__(self, constraint: str, indices: tuple, magnitude: float):
        self.constraint = constraint
        self.indices = indices
        self.magnitude = magnitude
        super().__init__(
            f"constraint {constraint!r} violated at {indices} by {magnitude:.3e}"
        )


class WrongKind(DesignError):
    """A standard-only operation was applied to an extended design, or vice versa."""


class InfeasibleDesign(DesignError):
    """The design cannot estimate all dose-placebo contrasts."""


class InestimableFunctional(DesignError):
    """The requested linear functional is not estimable under the design."""


class InvalidStage(DesignError, ValueError):
    """Stage index outside 1..t."""


class StageInestimable(DesignError):
    """Some interim stage cannot estimate its own dose-placebo contrast."""

    def __init__(self, stage: int):
        self.stage = stage
        super().__init__(f"stage {stage} cannot estimate its dose-placebo contrast")


class NotAGInverse(DesignError):
    """A supplied matrix fails the defining property A @ G @ A == A.

    The ``block`` attribute names the offending piece: ``"m_tau"``, ``"m22"``
    or ``"assembled"``.
    """

    def __init__(self, block: str, residual: float):
        self.block = block
        self.residual = residual
        super().__init__(
            f"matrix supplied for {block!r} is not a generalized inverse "
            f"(residual {residual:.3e})"
        )


class InvalidWeightMatrix(DesignError):
    """An E-weight matrix is not symmetric PSD with unit trace."""


class TooLarge(DesignError):
    """The requested enumeration would exceed the supported problem size."""


class EmptyPolytope(DesignError):
    """The constraint system admits no feasible design."""


class SingularIterate(DesignError):
    """The optimizer could not keep iterates away from singular designs."""


class ParseError(DesignError, ValueError):
    """A design or configuration file could not be parsed."""
