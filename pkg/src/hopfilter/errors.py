"""Exception types shared across the package."""


class HopfilterError(Exception):
    """Base class for all package-specific errors."""


class NonStochastic(HopfilterError):
    """A probability vector or transition matrix is not row-stochastic."""


class InvalidProbability(HopfilterError):
    """A probability argument lies outside [0, 1] or is not finite."""


class DimensionMismatch(HopfilterError):
    """Matrix or signal dimensions are mutually inconsistent."""


class ZeroDisturbance(HopfilterError):
    """An l2-gain ratio was requested for a trajectory with zero input energy."""


class NonUniformCluster(HopfilterError):
    """A cluster mixes modes whose A, C_y or C_z matrices differ, so no
    single cluster-indexed filter realization exists."""


class NonBernoulliChain(HopfilterError):
    """The synthesis coupling constraint requires identical chain rows."""


class Infeasible(HopfilterError):
    """The semidefinite program admits no solution (e.g. the error dynamics
    cannot be certified mean-square stable at this loss level)."""


class SolverFailure(HopfilterError):
    """The conic solver terminated without a conclusive status."""


class IllConditioned(HopfilterError):
    """A certificate matrix is too ill-conditioned to invert reliably."""


class UnknownPowerLevel(HopfilterError):
    """No transmit-current entry exists for the requested output power."""


class ZeroBaseline(HopfilterError):
    """A ratio against a zero (or non-positive) baseline was requested."""


class BaselineInfeasible(HopfilterError):
    """The lossless reference synthesis failed, so no ratio curve exists."""


class ParseError(HopfilterError):
    """A model or config file does not match the documented schema."""
