from dataclasses import dataclass, field
from typing import Dict, List, Tuple


@dataclass(frozen=True)
class EllipseEvolution:
    """Ellipse with semi-axes a(t) = a0 + t/2, b(t) = b0 - L t centred at (a0 + nu, theta)."""

    a0: float
    b0: float
    L: float
    nu: float = 0.0
    theta: float = 0.5

    @property
    def t_max(self) -> float:
        return min(2.0 * self.a0, self.b0 / (2.0 * self.L))

    @property
    def da(self) -> float:
        return 0.5

    @property
    def db(self) -> float:
        return -self.L

    def a(self, t: float) -> float:
        return self.a0 + 0.5 * t

    def b(self, t: float) -> float:
        return self.b0 - self.L * t

    def center(self) -> Tuple[float, float]:
        return (self.a0 + self.nu, self.theta)


@dataclass(frozen=True)
class SupersolutionParams:
    """Margin delta, flow bound M0 and the derived ellipse constants.

    Attributes:
        delta: Distance kept from the corners of the unit square, in (0, 1/2).
        M0: max |V|.
        a0: Initial horizontal semi-axis.
        b0: Initial vertical semi-axis, delta / 2.
        L: Shrink rate of the vertical semi-axis.
    """

    delta: float
    M0: float
    a0: float
    b0: float
    L: float

    @property
    def t_max(self) -> float:
        return min(2.0 * self.a0, self.b0 / (2.0 * self.L))

    def ellipse(self, theta: float = 0.5, nu: float = 0.0) -> EllipseEvolution:
        return EllipseEvolution(self.a0, self.b0, self.L, nu, theta)


@dataclass
class ContainmentRow:
    t: float
    min_margin: float
    violations: int
    nodes_checked: int


@dataclass
class ContainmentReport:
    """Solver burnt region versus the analytic ellipse at checkpoint times.

    Attributes:
        rows: One entry per checkpoint time.
        boundary_values: G at (0, theta) of the square at t_max, keyed by theta.
        offending_nodes: (t, i, j) of nodes inside the ellipse with G >= 0.
    """

    rows: List[ContainmentRow] = field(default_factory=list)
    boundary_values: Dict[float, float] = field(default_factory=dict)
    offending_nodes: List[Tuple[float, int, int]] = field(default_factory=list)

    @property
    def contained(self) -> bool:
        return all(row.violations == 0 for row in self.rows)

    @property
    def boundary_burnt(self) -> bool:
        return all(value < 0 for value in self.boundary_values.values())

    @property
    def passed(self) -> bool:
        return self.contained and self.boundary_burnt
