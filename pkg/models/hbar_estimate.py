from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple


class Method(str, Enum):
    """Routes to the effective burning velocity."""

    FRONT_SPEED = "front_speed"
    DISCOUNTED = "discounted"
    GAME = "game"


@dataclass
class HbarEstimate:
    """An estimate of the effective burning velocity H_A(p).

    Attributes:
        p: Direction (not necessarily unit).
        A: Flow amplitude.
        d: Markstein number.
        method: Estimation route.
        value: Estimated H_A(p).
        discretization: Grid, time step or discount list, horizon, controls.
        error_indicator: Oscillation bound or extrapolation spread.
        extras: Secondary diagnostics kept for auditing.
    """

    p: Tuple[float, float]
    A: float
    d: float
    method: Method
    value: float
    discretization: Dict[str, Any] = field(default_factory=dict)
    error_indicator: float = float("nan")
    extras: Dict[str, Any] = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        """Nonpositive estimates are kept for reporting but flagged invalid."""
        return self.value > 0

    def row(self) -> Dict[str, Any]:
        """Flat record for the sweep table."""
        return {
            "p1": self.p[0],
            "p2": self.p[1],
            "A": self.A,
            "d": self.d,
            "method": self.method.value,
            "hbar": self.value,
            "err": self.error_indicator,
            "grid": self.discretization.get("grid"),
            **{key: value for key, value in self.discretization.items() if key != "grid"},
        }


@dataclass
class GrowthLawFit:
    """Bracket constants for H = A pi |p|_1 / (2 log A + C) and the trend of H log A / A.

    Attributes:
        c_lower: C1, the smallest implied constant.
        c_upper: C2, the largest implied constant.
        implied: Implied constant for each amplitude.
        slope, intercept, r_squared: Linear trend of H log A / A against log A.
    """

    c_lower: float
    c_upper: float
    implied: List[float]
    slope: float
    intercept: float
    r_squared: float

    @property
    def residual(self) -> float:
        """Width of the bracket, C2 - C1."""
        return self.c_upper - self.c_lower


@dataclass
class ContinuityReport:
    values: List[float]
    gaps: List[float]
    max_gap: float
    median_gap: float
    jumps: List[int] = field(default_factory=list)


@dataclass(frozen=True)
class Resolution:
    """Discretization shared by the three estimators.

    Attributes:
        grid: PDE nodes per axis.
        T, burn_in, checkpoint_every: Front-speed horizon, discarded start and checkpoint spacing.
        eps_factor: Curvature regularization as a multiple of h.
        lambdas: Decreasing discount factors.
        tol, max_iterations: Discounted pseudo-time stopping rule.
        tau, game_T, game_grid, game_cap: Game step, horizon, DP grid and optional step cap.
        game_burn_in: Game time discarded before the value drift is read.
        n_angles, n_radii: Game control discretization.
    """

    grid: int = 128
    T: float = 40.0
    burn_in: float = 10.0
    checkpoint_every: float = 1.0
    eps_factor: float = 1.0
    lambdas: Tuple[float, ...] = (0.2, 0.1, 0.05)
    tol: float = 1e-5
    max_iterations: int = 500_000
    tau: float = 0.02
    game_T: float = 2.0
    game_burn_in: float = 0.0
    game_grid: int = 48
    game_cap: Optional[int] = None
    n_angles: int = 64
    n_radii: int = 3
