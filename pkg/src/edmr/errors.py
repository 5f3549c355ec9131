"""Exception hierarchy shared by all edmr modules."""


class EDMRError(Exception):
    """Base class for every error raised by the package."""


class ParameterError(EDMRError, ValueError):
    """A physical parameter violates its precondition."""


class ConfigurationError(EDMRError, ValueError):
    """A run or step setting is inconsistent (step size, Nyquist, unknown key...)."""


class DegenerateStateError(EDMRError, ValueError):
    """An observable is undefined for the given state (e.g. zero trace)."""


class ConsistencyError(EDMRError, RuntimeError):
    """An internal numerical invariant was violated."""


class SteadyStateError(EDMRError, RuntimeError):
    """No stationary pair state exists or the solve was ill-conditioned."""


class RangeError(EDMRError, ValueError):
    """A requested window lies outside the sampled support."""


class NoPeakError(EDMRError, ValueError):
    """A spectrum carries no resolvable peak."""


class UsageError(EDMRError, ValueError):
    """Unsupported option passed to a front-end routine."""
