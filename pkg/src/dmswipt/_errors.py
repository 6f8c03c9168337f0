"""Exception types shared across the package."""


class DmswiptError(Exception):
    """Base class for all package-specific errors."""


class DesignInfeasibleError(DmswiptError):
    """The requested operating point cannot be met by any design.

    Raised when every branch of a design search is infeasible, for
    example a harvested-energy floor that exceeds what the power budget
    can deliver through the path loss.
    """


class RankRepairError(DmswiptError):
    """Power-minimization repair returned a matrix that is not rank one.

    Carries the offending second-to-first eigenvalue ratio.  This signals
    a solver-accuracy breach, not an algorithmic failure: the repair
    problem provably admits a rank-one optimum.
    """

    def __init__(self, ratio, message=None):
        self.ratio = float(ratio)
        super().__init__(message or f"rank-one repair failed: ratio {self.ratio:.3e}")


class DegenerateSolutionError(DmswiptError):
    """A fractional-program recovery was handed a nonpositive scale."""


class InvalidLinearizationError(DmswiptError):
    """A Taylor surrogate was requested at an invalid expansion point."""


class SolverFailureError(DmswiptError):
    """No configured backend produced a usable solution."""


class ConfigError(DmswiptError):
    """A run configuration file is malformed; message names the field."""
