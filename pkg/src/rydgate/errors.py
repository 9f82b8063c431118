"""Exception and warning classes raised by rydgate."""


class RydgateError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(RydgateError, ValueError):
    """Experiment configuration is malformed or inconsistent."""


class ParameterError(ConfigError):
    """Physical or trap parameters violate their invariants."""


class DimensionMismatch(RydgateError, ValueError):
    pass


class NonHermitianInput(RydgateError, ValueError):
    pass


class TimeOutOfRange(RydgateError, ValueError):
    """Requested time lies outside the pulse window ``[0, 2 tau]``."""


class SolverError(RydgateError):
    """Numerical failure during time evolution or analysis."""


class NormDrift(SolverError):
    pass


class TraceDrift(SolverError):
    pass


class PositivityLoss(SolverError):
    pass


class DegenerateAngle(RydgateError, ValueError):
    pass


class AmbiguousTracking(SolverError):
    """Branch matching between neighbouring grid points fell below the overlap floor."""


class DegenerateGap(SolverError):
    pass


class LowReturn(SolverError):
    """A qubit basis state did not return to the qubit subspace; its phase is meaningless."""


class BracketInvalid(SolverError):
    pass


class SupportOutsideQubitSubspace(RydgateError, ValueError):
    pass


class PerturbationInvalid(UserWarning):
    """Perturbative motional estimate is outside its range of validity."""


class InvalidState(RydgateError, ValueError):
    """Initial state is not normalised or not a valid density matrix."""
