"""Exception types shared across the package."""


class PsyadaptError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(PsyadaptError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class OutOfRange(PsyadaptError, ValueError):
    """A requested probability level is unattainable for the given parameters."""


class NonConvergence(PsyadaptError, RuntimeError):
    """An iterative procedure exhausted its retry budget without converging."""


class NonPositiveDefiniteHessian(PsyadaptError, RuntimeError):
    """The negative Hessian at the located mode is not positive definite."""


class DegenerateWeights(PsyadaptError, RuntimeError):
    """A single importance weight carries essentially all of the mass."""


class DegenerateFunctional(PsyadaptError, RuntimeError):
    """Too many samples had to be dropped while evaluating a functional."""


class DegenerateVariance(PsyadaptError, RuntimeError):
    """A conditional variance collapsed below the numerical floor."""


class GridTooCoarse(PsyadaptError, RuntimeError):
    """Refining the integration grid moved the answer by more than tolerance."""


class AllIdentical(PsyadaptError, ValueError):
    """All effective sample points coincide; no density can be estimated."""


class QuadratureFailure(PsyadaptError, RuntimeError):
    """Adaptive quadrature did not reach the requested accuracy."""


class AlreadyPending(PsyadaptError, RuntimeError):
    """A stimulus proposal is already awaiting a response."""


class NoPendingStimulus(PsyadaptError, RuntimeError):
    """A response was supplied but no stimulus proposal is pending."""


class SessionStopped(PsyadaptError, RuntimeError):
    """The session's stopping rule has been satisfied; no further trials."""


class SchemaVersionMismatch(PsyadaptError, ValueError):
    """A persisted session uses a schema version this build cannot read."""


class CorruptFile(PsyadaptError, ValueError):
    """A persisted session file is unreadable or structurally invalid."""


class AllZeroInformation(UserWarning):
    """Every candidate stimulus carries (numerically) zero information."""


class LogFloorApplied(RuntimeWarning):
    """A likelihood term hit probability 0/1 and was clamped at the log floor."""
