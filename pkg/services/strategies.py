"""Player I and Player II policies for forward game simulation.

Player I returns a control eta with |eta| <= 1; Player II sees eta and
returns a sign b. Strategies may keep per-run state, cleared by reset().
"""

import logging
from abc import ABC, abstractmethod
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from models.flow import CELL_OFFSETS, CellRegion, CellularFlow, RegionKind, wrap
from models.game import GameParams
from services.flowfield import max_speed_radius, stream, velocity
from services.game import perp, step_position

logger = logging.getLogger(__name__)

STAGNATION_SPEED = 1e-14
Condition = Callable[[np.ndarray], bool]


class StrategyI(ABC):
    name = "player_i"

    def reset(self, x0: np.ndarray) -> None:
        """Prepare for a new run starting at x0."""

    @abstractmethod
    def choose(self, x: np.ndarray) -> np.ndarray:
        """Control eta for the current position."""

    @property
    def events(self) -> List[str]:
        return []


class FollowFlow(StrategyI):
    name = "follow_flow"

    def choose(self, x):
        return np.zeros(2)


class Exit(StrategyI):
    """eta perpendicular to the displacement from `center` (the start when None)."""

    name = "exit"

    def __init__(self, center: Optional[Sequence[float]] = None):
        self.center = None if center is None else np.asarray(center, dtype=float)
        self._anchor = self.center

    def reset(self, x0):
        self._anchor = np.asarray(x0, dtype=float) if self.center is None else self.center

    def choose(self, x):
        offset = np.asarray(x, dtype=float) - self._anchor
        length = float(np.hypot(*offset))
        if length == 0:
            return np.array([1.0, 0.0])
        return perp(offset) / length


class AxisPush(StrategyI):
    """Unit eta with eta_perp equal to the target direction."""

    name = "axis_push"

    def __init__(self, direction: Sequence[float]):
        e = np.asarray(direction, dtype=float)
        e = e / np.hypot(*e)
        self.direction = e
        self._eta = np.array([e[1], -e[0]])

    def choose(self, x):
        return self._eta


class Descent(StrategyI):
    """eta = sign(H) V/|V|, so that eta_perp = -sign(H) DH/|DH| lowers |H|.

    Near a stagnation point (|V| < 1e-14) it switches to the exit strategy on
    the largest dyadic ball around that point where |V| <= 1/4, and resumes
    once the trajectory leaves the ball.
    """

    name = "descent"

    def __init__(self, flow: CellularFlow, exit_bound: float = 0.25):
        self.flow = flow
        self.exit_bound = exit_bound
        self._exit: Optional[Exit] = None
        self._exit_radius = 0.0
        self._events: List[str] = []

    @property
    def events(self) -> List[str]:
        return self._events

    def reset(self, x0):
        self._exit = None
        self._events = []

    def choose(self, x):
        x = np.asarray(x, dtype=float)
        if self._exit is not None:
            if np.hypot(*(x - self._exit.center)) < self._exit_radius:
                return self._exit.choose(x)
            self._exit = None

        v = velocity(self.flow, x)
        speed = float(np.hypot(*v))
        if speed < STAGNATION_SPEED:
            self._exit_radius = max_speed_radius(self.flow, x, self.exit_bound)
            self._exit = Exit(x)
            self._exit.reset(x)
            self._events.append(f"exit_fallback@({x[0]:.6f},{x[1]:.6f}) r={self._exit_radius:g}")
            return self._exit.choose(x)

        sign = -1.0 if stream(x) < 0 else 1.0
        return sign * v / speed


class Composite(StrategyI):
    """Phases run in order; a phase hands over once its switch condition holds."""

    def __init__(self, phases: List[Tuple[StrategyI, Optional[Condition]]]):
        if not phases:
            raise ValueError("Composite needs at least one phase")
        self.phases = phases
        self.index = 0
        self._events: List[str] = []

    @property
    def name(self) -> str:
        return "composite(" + ">".join(strategy.name for strategy, _ in self.phases) + ")"

    @property
    def events(self) -> List[str]:
        nested = [event for strategy, _ in self.phases for event in strategy.events]
        return self._events + nested

    def reset(self, x0):
        self.index = 0
        self._events = []
        for strategy, _ in self.phases:
            strategy.reset(x0)

    def choose(self, x):
        while self.index < len(self.phases) - 1:
            _, switch = self.phases[self.index]
            if switch is None or not switch(x):
                break
            self.index += 1
            self._events.append(f"phase {self.index} ({self.phases[self.index][0].name})")
            self.phases[self.index][0].reset(x)
        return self.phases[self.index][0].choose(x)


class StrategyII(ABC):
    name = "player_ii"

    def reset(self, x0: np.ndarray) -> None:
        """Prepare for a new run starting at x0."""

    @abstractmethod
    def choose(self, x: np.ndarray, eta: np.ndarray, params: GameParams) -> int:
        """Sign b in {-1, +1}, chosen after seeing eta."""


class WorstCaseEnum(StrategyII):
    """Greedy adversary: the sign whose successor maximizes the objective; ties go to +1."""

    def __init__(self, objective: Callable[[np.ndarray], float], name: str = "worst_case"):
        self.objective = objective
        self.name = name

    def choose(self, x, eta, params):
        plus = self.objective(step_position(x, eta, 1, params))
        minus = self.objective(step_position(x, eta, -1, params))
        return 1 if plus >= minus else -1


class MaxSign(WorstCaseEnum):
    def __init__(self):
        super().__init__(lambda y: float(stream(y)), "max_sign")


class MinSign(WorstCaseEnum):
    def __init__(self):
        super().__init__(lambda y: -float(stream(y)), "min_sign")


class Fixed(StrategyII):
    def __init__(self, sign: int = 1):
        if sign not in (-1, 1):
            raise ValueError(f"sign must be +1 or -1, got {sign}")
        self.sign = sign
        self.name = f"fixed({sign:+d})"

    def choose(self, x, eta, params):
        return self.sign


class OpposeAxis(StrategyII):
    """b with b eta.axis <= 0."""

    def __init__(self, axis: Sequence[float] = (1.0, 0.0)):
        self.axis = np.asarray(axis, dtype=float)
        self.name = f"oppose_axis({self.axis[0]:g},{self.axis[1]:g})"

    def choose(self, x, eta, params):
        return -1 if float(np.dot(eta, self.axis)) > 0 else 1


class OpposeDisplacement(StrategyII):
    """b with b eta.(x - x0) <= 0: the exit strategy played by Player II."""

    name = "oppose_displacement"

    def __init__(self):
        self._anchor = np.zeros(2)

    def reset(self, x0):
        self._anchor = np.asarray(x0, dtype=float)

    def choose(self, x, eta, params):
        return -1 if float(np.dot(eta, np.asarray(x) - self._anchor)) > 0 else 1


def cell_distance(x, index: int) -> float:
    """Euclidean distance from x to the nearest periodic copy of the closed cell U_index."""
    q1, q2 = CELL_OFFSETS[index]
    y1, y2 = wrap((float(x[0]) - q1 - np.pi / 2, float(x[1]) - q2 - np.pi / 2), -np.pi)
    return float(np.hypot(max(abs(y1) - np.pi / 2, 0.0), max(abs(y2) - np.pi / 2, 0.0)))


def _edge_coordinates(x, index: int, direction: np.ndarray) -> Tuple[float, float]:
    """Distance to the edge of U_index facing `direction`, and the position along it."""
    q1, q2 = CELL_OFFSETS[index]
    y1, y2 = wrap((float(x[0]) - q1, float(x[1]) - q2))
    if direction[0] < 0:
        return y1, y2
    if direction[0] > 0:
        return np.pi - y1, y2
    if direction[1] < 0:
        return y2, y1
    return np.pi - y2, y1


def _leg_direction(source: int, target: int) -> np.ndarray:
    offset = np.subtract(CELL_OFFSETS[target], CELL_OFFSETS[source])
    offset = wrap(offset, -np.pi - 1e-9)
    if np.count_nonzero(np.abs(offset) > 1e-9) != 1:
        raise ValueError(f"cells U{source} and U{target} do not share an edge")
    return np.sign(offset) * (np.abs(offset) > 1e-9)


def cell_transition_strategy(
    flow: CellularFlow,
    path: Sequence[int],
    level: float = 0.02,
    strip: float = 0.2,
    window: Tuple[float, float] = (0.2 * np.pi, 0.8 * np.pi),
) -> Composite:
    """Walk through adjacent cells: descend to |H| <= level, ride the flow to the
    middle of the exit edge, then push across it.

    Args:
        flow: Cellular flow.
        path: Cell indices, e.g. [1, 2, 4] for U1 -> U2 -> U4.
        level: |H| level of the orbit used to reach the edge.
        strip: Maximum distance to the exit edge before pushing.
        window: Range along the edge, measured from its corner, where pushing starts.
    """
    if len(path) < 2:
        raise ValueError("a cell transition needs at least two cells")

    phases: List[Tuple[StrategyI, Optional[Condition]]] = []
    legs = list(zip(path[:-1], path[1:]))
    for position, (source, target) in enumerate(legs):
        direction = _leg_direction(source, target)
        target_cell = CellRegion(RegionKind.TRANSLATED_CELL, index=target)

        def low_level(x, level=level):
            return abs(float(stream(x))) <= level

        def at_edge(x, source=source, direction=direction):
            normal, along = _edge_coordinates(x, source, direction)
            return normal < strip and window[0] <= along <= window[1]

        def inside_target(x, target_cell=target_cell):
            return target_cell.contains(x) and abs(float(stream(x))) >= 2.0 * level

        last_leg = position == len(legs) - 1
        phases.append((Descent(flow), low_level))
        phases.append((FollowFlow(), at_edge))
        phases.append((AxisPush(direction), None if last_leg else inside_target))

    return Composite(phases)
