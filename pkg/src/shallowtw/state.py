"""Physical parameter tuples and the (velocity, surface) state pair."""

from dataclasses import dataclass
import math

import numpy as np

from .errors import GridMismatch, NonPositivePhysical, NonZeroMean
from .spectral import SpectralField, aniso_norm, sobolev_norm

OMNISONIC = "omnisonic"
SUBSONIC = "subsonic"


@dataclass(frozen=True)
class Params:
    """Dimensionless wave speed, viscosity, surface tension, and regime.

    The regime selects the forcing structure; ``subsonic`` additionally
    requires ``gamma < 1``.
    """

    gamma: float
    mu: float = 0.0
    sigma: float = 0.0
    regime: str = OMNISONIC

    def __post_init__(self):
        if self.gamma <= 0:
            raise NonPositivePhysical("wave speed gamma must be positive")
        if self.mu < 0 or self.sigma < 0:
            raise NonPositivePhysical("mu and sigma must be nonnegative")
        if self.regime not in (OMNISONIC, SUBSONIC):
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.regime == SUBSONIC and self.gamma >= 1:
            raise ValueError("the subsonic regime requires gamma < 1")

    def replace(self, **kw):
        data = {
            "gamma": self.gamma,
            "mu": self.mu,
            "sigma": self.sigma,
            "regime": self.regime,
        }
        data.update(kw)
        return Params(**data)


@dataclass(frozen=True)
class State:
    """Unknown pair: vector velocity ``v`` and mean-free surface ``eta``.

    The surface zero mode is a gauge on the torus; construction pins it
    to zero by subtracting the spatial mean, so the invariant holds by
    construction for every instance.
    """

    v: SpectralField
    eta: SpectralField

    def __post_init__(self):
        if self.v.grid != self.eta.grid:
            raise GridMismatch("v and eta must share one grid")
        if self.v.components != self.grid.dim:
            raise ValueError("v must have d components")
        if self.eta.components != 1:
            raise ValueError("eta must be scalar")
        mean = float(self.eta.mean()[0])
        if mean != 0.0:
            object.__setattr__(
                self,
                "eta",
                SpectralField(self.eta.grid, samples=self.eta.samples - mean),
            )

    @property
    def grid(self):
        return self.v.grid

    @classmethod
    def zeros(cls, grid):
        return cls(
            v=SpectralField.zeros(grid, components=grid.dim),
            eta=SpectralField.zeros(grid, components=1),
        )

    def min_depth(self):
        return 1.0 + float(np.min(self.eta.samples))

    def __add__(self, other):
        return State(v=self.v + other.v, eta=self.eta + other.eta)

    def __sub__(self, other):
        return State(v=self.v - other.v, eta=self.eta - other.eta)

    def __mul__(self, scalar):
        return State(v=self.v * scalar, eta=self.eta * scalar)

    __rmul__ = __mul__

    def norm_x(self, s=0):
        """Norm of the state space: H^s for v, anisotropic H^s for eta."""
        return math.sqrt(
            sobolev_norm(self.v, s) ** 2 + aniso_norm(self.eta, s) ** 2
        )
