"""Exception types shared across the package."""


class ShallowTWError(Exception):
    """Base class for all package errors."""


class NonFiniteSymbol(ShallowTWError):
    """A Fourier multiplier evaluated to NaN/Inf at a needed frequency."""


class NonZeroMean(ShallowTWError):
    """A field that must be mean-free carries a nonzero spatial mean."""


class GridMismatch(ShallowTWError):
    """Fields that must share one grid do not."""


class DimensionMismatch(ShallowTWError):
    """An operation received a grid of the wrong spatial dimension."""


class ZeroFrequency(ShallowTWError):
    """A symbol that is undefined at xi = 0 was evaluated there."""


class InvalidCase(ShallowTWError):
    """Parameter tuple lies outside the requested reparameterization region."""


class NonPositiveDepth(ShallowTWError):
    """The total depth 1 + eta is not strictly positive."""


class NonPositivePhysical(ShallowTWError):
    """A physical input that must be positive is not."""


class NonZeroMeanData(ShallowTWError):
    """Right-hand side data for the mass equation must be mean-free."""


class SingularSymbol(ShallowTWError):
    """The linearization matrix symbol is numerically singular at some mode."""


class SolverError(ShallowTWError):
    """Base class for iteration failures; carries the partial report if any."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class KrylovStagnation(SolverError):
    """Krylov iteration did not meet tolerance within its budget."""


class MaxItersExceeded(SolverError):
    """Newton iteration ran out of its iteration budget."""


class DepthCollapse(SolverError):
    """Backtracking could not produce a trial state with 1 + eta > 0."""


class SweepStalled(SolverError):
    """Parameter continuation exhausted its step-halving budget."""
