from dataclasses import dataclass
from typing import Tuple

import numpy as np

TWO_PI = 2.0 * np.pi
MIN_NODES = 16


@dataclass(frozen=True)
class Grid2:
    """Periodic node values on the torus [0, 2*pi)^2.

    Node (i, j) sits at x = (i*h1, j*h2); values are stored row-major with
    axis 0 along x1.
    """

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError(f"Grid2 needs a 2D array, got shape {values.shape}")
        if min(values.shape) < MIN_NODES:
            raise ValueError(f"Grid2 needs at least {MIN_NODES} nodes per axis, got {values.shape}")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, n1: int, n2: int = None) -> "Grid2":
        return cls(np.zeros((n1, n2 or n1)))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    @property
    def n1(self) -> int:
        return self.values.shape[0]

    @property
    def n2(self) -> int:
        return self.values.shape[1]

    @property
    def h1(self) -> float:
        return TWO_PI / self.n1

    @property
    def h2(self) -> float:
        return TWO_PI / self.n2

    @property
    def h(self) -> float:
        """The coarser of the two spacings."""
        return max(self.h1, self.h2)

    def coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        """Node coordinates as two (n1, n2) arrays."""
        x1 = np.arange(self.n1) * self.h1
        x2 = np.arange(self.n2) * self.h2
        return np.meshgrid(x1, x2, indexing="ij")

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def mean(self) -> float:
        return float(self.values.mean())

    def oscillation(self) -> float:
        return float(self.values.max() - self.values.min())
