from dataclasses import dataclass, field, replace
from typing import List, Tuple

import numpy as np

from models.flow import CellularFlow
from models.grid import Grid2


@dataclass(frozen=True)
class CorrectorState:
    """Periodic corrector w with G(x, t) = p.x + w(x, t).

    Attributes:
        w: Periodic part of the level-set function.
        p: Slope of the affine initial front; (0, 0) gives a pure level-set run.
        d: Markstein number.
        flow: Cellular flow advecting the front.
        t: Elapsed time.
    """

    w: Grid2
    p: Tuple[float, float]
    d: float
    flow: CellularFlow
    t: float = 0.0

    def __post_init__(self):
        if self.d < 0:
            raise ValueError(f"d must be non-negative, got {self.d}")
        object.__setattr__(self, "p", (float(self.p[0]), float(self.p[1])))

    @classmethod
    def flat(cls, n: int, p, d: float, flow: CellularFlow) -> "CorrectorState":
        """Affine initial data G(x, 0) = p.x, i.e. w = 0."""
        return cls(Grid2.zeros(n), p, d, flow)

    @property
    def p_norm(self) -> float:
        return float(np.hypot(*self.p))

    def level_set(self) -> Grid2:
        """Node values of G = p.x + w."""
        x1, x2 = self.w.coordinates()
        return Grid2(self.p[0] * x1 + self.p[1] * x2 + self.w.values)

    def advanced(self, values: np.ndarray, dt: float) -> "CorrectorState":
        return replace(self, w=Grid2(values), t=self.t + dt)


@dataclass(frozen=True)
class Checkpoint:
    t: float
    mean_w: float
    min_w: float
    max_w: float

    @property
    def osc(self) -> float:
        return self.max_w - self.min_w

    @classmethod
    def of(cls, state: CorrectorState) -> "Checkpoint":
        values = state.w.values
        return cls(state.t, float(values.mean()), float(values.min()), float(values.max()))


@dataclass(frozen=True)
class DiscountedState:
    """Converged solution of lambda v + F(v) = 0 on the torus.

    Attributes:
        v: Solution grid.
        lam: Discount factor lambda.
        iterations: Pseudo-time steps taken.
        residual: Final max-norm of lambda v + F(v).
        residuals: Sampled residual history.
    """

    v: Grid2
    lam: float
    p: Tuple[float, float]
    d: float
    flow: CellularFlow
    iterations: int = 0
    residual: float = float("nan")
    residuals: List[float] = field(default_factory=list)

    @property
    def scaled(self) -> np.ndarray:
        """lambda * v at every node."""
        return self.lam * self.v.values
