"""Exception types shared across the package."""


class VeloPlanError(Exception):
    """Base class for all package errors."""


class InvalidParameter(VeloPlanError, ValueError):
    """A physical parameter or program dimension is out of its valid range."""


class MalformedInput(VeloPlanError, ValueError):
    """An input file or document cannot be parsed into an instance."""


class NoSolution(VeloPlanError):
    """The solver returned no usable primal point."""


class SingularSpeed(VeloPlanError, ValueError):
    """A squared speed that appears under 1/sqrt(w) is not positive."""


class ConditionUndefined(VeloPlanError):
    """An exactness condition cannot be evaluated (non-positive denominator)."""
