from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np


@dataclass
class Trajectory:
    """A game path with the controls that produced it.

    Attributes:
        points: Positions x_0..x_n, shape (n + 1, 2).
        etas: Player I controls, shape (n, 2).
        signs: Player II signs, shape (n,).
        tau: Step size.
        meta: Strategy names, fallback events and the stop reason.
    """

    points: np.ndarray
    etas: np.ndarray
    signs: np.ndarray
    tau: float
    meta: Dict[str, Any] = field(default_factory=dict)

    @property
    def steps(self) -> int:
        return len(self.signs)

    @property
    def duration(self) -> float:
        return self.steps * self.tau**2

    @property
    def final(self) -> np.ndarray:
        return self.points[-1]


@dataclass
class ReachReport:
    """Outcome of driving a trajectory into a target set.

    Attributes:
        start: Initial point.
        target: Label of the target region.
        steps_used: Game steps taken.
        time_used: steps_used * tau**2.
        success: Whether the final point lies in the target.
        adversary: Name of the Player II strategy.
        final: Final point.
    """

    start: Tuple[float, float]
    target: str
    steps_used: int
    time_used: float
    success: bool
    adversary: str
    final: Tuple[float, float] = (float("nan"), float("nan"))
    trajectory: Optional[Trajectory] = field(default=None, repr=False)


@dataclass
class CrossingReport:
    """Horizontal progress of Player I against the axis-opposing adversary.

    Attributes:
        max_step_rate: Largest per-step rightward displacement divided by tau**2.
        mean_rate: Net horizontal displacement divided by elapsed time.
        bound: The speed cap M = 1 + max|V|.
        crossed_curve: Whether the trajectory left the lower component of the curve.
        entered_window: Whether the trajectory reached the window.
        crossed_first: Curve crossing happened no later than the window entry.
    """

    max_step_rate: float
    mean_rate: float
    bound: float
    crossed_curve: bool
    entered_window: bool
    crossed_first: bool
    steps: int = 0

    @property
    def within_bound(self) -> bool:
        return self.max_step_rate <= self.bound + 1e-9


@dataclass
class SpreadReport:
    """Measured spread of exit-strategy trajectories: max |x_n - x_0| <= C (sqrt(t) + t)."""

    constant: float
    max_radius: float
    horizon: float
    player: str
