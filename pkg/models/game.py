from dataclasses import dataclass
from typing import Tuple

import numpy as np

from models.flow import CellularFlow
from models.grid import Grid2


@dataclass(frozen=True)
class GameParams:
    """Step size, Markstein number and control discretization of the game.

    Attributes:
        tau: Step size; one step lasts tau**2 in game time.
        d: Markstein number.
        n_steps: Number of game steps N.
        flow: Cellular flow.
        n_angles: Uniform angles sampled on the unit circle.
        n_radii: Radii sampled on [0, 1], both ends included.
        align_controls: Add the directions perpendicular to the affine slope.
        interpolation_order: Spline order of the periodic lookup in the DP, 1 or 3.
    """

    tau: float
    d: float
    n_steps: int
    flow: CellularFlow
    n_angles: int = 64
    n_radii: int = 3
    align_controls: bool = True
    interpolation_order: int = 3

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.d < 0:
            raise ValueError(f"d must be non-negative, got {self.d}")
        if self.n_steps < 0:
            raise ValueError(f"n_steps must be non-negative, got {self.n_steps}")
        if self.n_angles < 8:
            raise ValueError(f"n_angles must be at least 8, got {self.n_angles}")
        if self.n_radii < 2:
            raise ValueError(f"n_radii must be at least 2, got {self.n_radii}")
        if self.interpolation_order not in (1, 3):
            raise ValueError(f"interpolation_order must be 1 or 3, got {self.interpolation_order}")

    @property
    def dt(self) -> float:
        return self.tau**2

    @property
    def total_time(self) -> float:
        return self.n_steps * self.tau**2

    @property
    def diffusion(self) -> float:
        """Coefficient sqrt(2d) of the b-controlled displacement."""
        return float(np.sqrt(2.0 * self.d))

    def radii(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_radii)


@dataclass(frozen=True)
class ValueGrid:
    """Game value u(x) = base(x) + p.x after k backward steps."""

    base: Grid2
    p: Tuple[float, float]
    k: int = 0

    def value_at_nodes(self) -> np.ndarray:
        x1, x2 = self.base.coordinates()
        return self.base.values + self.p[0] * x1 + self.p[1] * x2


@dataclass(frozen=True)
class ConsistencyReport:
    """Where the scaled one-step increment falls relative to -[F_lower, F_upper].

    Attributes:
        scaled_increment: min-max increment divided by tau**2.
        lower, upper: The bracket -F_upper and -F_lower.
        slack: Tolerance added on both sides.
    """

    scaled_increment: float
    lower: float
    upper: float
    slack: float

    @property
    def inside(self) -> bool:
        return self.lower - self.slack <= self.scaled_increment <= self.upper + self.slack

    @property
    def distance(self) -> float:
        """Distance from the bracket, zero when inside it."""
        return max(self.lower - self.scaled_increment, self.scaled_increment - self.upper, 0.0)
