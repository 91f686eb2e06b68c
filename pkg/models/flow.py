from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

TWO_PI = 2.0 * np.pi

# Cell offsets q_i and corners O_i of the fundamental cell Q = [0, pi]^2.
CELL_OFFSETS = {
    1: (0.0, 0.0),
    2: (-np.pi, 0.0),
    3: (0.0, -np.pi),
    4: (-np.pi, -np.pi),
}
CELL_CORNERS = {
    1: (0.0, 0.0),
    2: (np.pi, 0.0),
    3: (np.pi, np.pi),
    4: (0.0, np.pi),
}
CELL_CENTER = (np.pi / 2, np.pi / 2)


def wrap(x, low: float = 0.0) -> np.ndarray:
    """Reduce coordinates into [low, low + 2*pi)."""
    return np.mod(np.asarray(x, dtype=float) - low, TWO_PI) + low


@dataclass(frozen=True)
class CellularFlow:
    """The cellular flow V = A (DH)^perp with stream function H = sin x1 sin x2.

    Attributes:
        amplitude: Flow intensity A. Zero is the laminar baseline.
    """

    amplitude: float

    def __post_init__(self):
        if not np.isfinite(self.amplitude) or self.amplitude < 0:
            raise ValueError(f"A must be non-negative, got {self.amplitude}")

    @property
    def max_speed(self) -> float:
        """Maximum of |V| over the plane."""
        return float(self.amplitude)


class RegionKind(str, Enum):
    """Regions of the cellular geometry used as reach targets and switch conditions."""

    CELL_INTERIOR = "cell_interior"  # Q_mu = {x in Q : H > mu}
    BOUNDARY_STRIP = "boundary_strip"  # Gamma_mu
    CROSS = "cross"  # Z_theta
    CORNER_BOX = "corner_box"  # D_mu around corner O_index
    TRANSLATED_CELL = "translated_cell"  # U_index = (0, pi)^2 + q_index
    LEVEL_BELOW = "level_below"  # open cell with H <= mu


@dataclass(frozen=True)
class CellRegion:
    """A region of the cellular geometry, reduced modulo the 2*pi period.

    Attributes:
        kind: Which defining inequality applies.
        parameter: mu or theta, depending on the kind.
        index: Cell or corner index 1..4 for translated cells and corner boxes.
    """

    kind: RegionKind
    parameter: float = 0.0
    index: int = 1

    def contains(self, x) -> bool:
        """Membership predicate for a single point."""
        x1, x2 = (float(v) for v in np.asarray(x, dtype=float)[:2])
        mu = self.parameter

        if self.kind == RegionKind.TRANSLATED_CELL:
            q1, q2 = CELL_OFFSETS[self.index]
            y1, y2 = wrap((x1 - q1, x2 - q2))
            return bool(0.0 < y1 < np.pi and 0.0 < y2 < np.pi)

        if self.kind == RegionKind.CORNER_BOX:
            c1, c2 = CELL_CORNERS[self.index]
            y1, y2 = wrap((x1 - c1, x2 - c2), -np.pi)
            return bool(abs(y1) <= mu and abs(y2) <= mu)

        if self.kind == RegionKind.BOUNDARY_STRIP:
            y1, y2 = wrap((x1, x2), -np.pi / 2)
            return bool(min(abs(y1), abs(y2), abs(y1 - np.pi), abs(y2 - np.pi)) < mu)

        y1, y2 = wrap((x1, x2))
        in_closed_cell = y1 <= np.pi and y2 <= np.pi
        stream = np.sin(y1) * np.sin(y2)

        if self.kind == RegionKind.CELL_INTERIOR:
            return bool(in_closed_cell and stream > mu)
        if self.kind == RegionKind.LEVEL_BELOW:
            return bool(0.0 < y1 < np.pi and 0.0 < y2 < np.pi and stream <= mu)
        if self.kind == RegionKind.CROSS:
            band1 = mu < y1 < np.pi - mu
            band2 = mu < y2 < np.pi - mu
            return bool(in_closed_cell and (band1 or band2))
        raise ValueError(f"Unknown region kind {self.kind}")

    def label(self) -> str:
        return f"{self.kind.value}[{self.index}]({self.parameter:g})"


@dataclass(frozen=True)
class Ball:
    """Closed Euclidean ball used as a point-with-radius reach target."""

    center: Tuple[float, float]
    radius: float

    def contains(self, x) -> bool:
        offset = np.asarray(x, dtype=float)[:2] - np.asarray(self.center, dtype=float)
        return bool(np.hypot(offset[0], offset[1]) <= self.radius)

    def label(self) -> str:
        return f"ball({self.center[0]:g},{self.center[1]:g};{self.radius:g})"


@dataclass(frozen=True)
class Box:
    """Axis-aligned closed rectangle [x1_min, x1_max] x [x2_min, x2_max] in the plane."""

    x1_range: Tuple[float, float]
    x2_range: Tuple[float, float]

    def contains(self, x) -> bool:
        x1, x2 = (float(v) for v in np.asarray(x, dtype=float)[:2])
        return bool(
            self.x1_range[0] <= x1 <= self.x1_range[1] and self.x2_range[0] <= x2 <= self.x2_range[1]
        )

    def label(self) -> str:
        return f"box({self.x1_range[0]:g}..{self.x1_range[1]:g},{self.x2_range[0]:g}..{self.x2_range[1]:g})"
