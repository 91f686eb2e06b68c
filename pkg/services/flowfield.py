"""Analytic cellular flow: stream function H = sin x1 sin x2, V = A (DH)^perp and derivatives."""

import logging
from typing import Tuple

import numpy as np
from scipy.optimize import brentq

from models.flow import CELL_CENTER, CellularFlow, wrap

logger = logging.getLogger(__name__)


def _split(x) -> Tuple[np.ndarray, np.ndarray]:
    """Reduce a point (or an array of points, last axis 2) into [0, 2*pi)."""
    reduced = wrap(x)
    return reduced[..., 0], reduced[..., 1]


def stream(x):
    """H(x) = sin x1 sin x2."""
    x1, x2 = _split(x)
    return np.sin(x1) * np.sin(x2)


def stream_gradient(x) -> np.ndarray:
    """DH(x) = (cos x1 sin x2, sin x1 cos x2)."""
    x1, x2 = _split(x)
    return np.stack([np.cos(x1) * np.sin(x2), np.sin(x1) * np.cos(x2)], axis=-1)


def stream_hessian(x) -> np.ndarray:
    """D^2 H(x) with -sin x1 sin x2 on the diagonal and cos x1 cos x2 off it."""
    x1, x2 = _split(x)
    diagonal = -np.sin(x1) * np.sin(x2)
    off = np.cos(x1) * np.cos(x2)
    return np.stack([np.stack([diagonal, off], axis=-1), np.stack([off, diagonal], axis=-1)], axis=-2)


def velocity(flow: CellularFlow, x) -> np.ndarray:
    """V(x) = A (-cos x2 sin x1, cos x1 sin x2)."""
    x1, x2 = _split(x)
    return flow.amplitude * np.stack([-np.cos(x2) * np.sin(x1), np.cos(x1) * np.sin(x2)], axis=-1)


def velocity_components(flow: CellularFlow, x1: np.ndarray, x2: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Velocity on coordinate arrays, as used by the grid solvers."""
    field = velocity(flow, np.stack([x1, x2], axis=-1))
    return field[..., 0], field[..., 1]


def level_curvature(x):
    """Curvature of the level curve of H through x, normal -DH/|DH|.

    Positive on the closed orbits around the cell centre, 1/rho near the
    centre for an orbit of radius rho.
    """
    gradient = stream_gradient(x)
    hessian = stream_hessian(x)
    h1, h2 = gradient[..., 0], gradient[..., 1]
    h11, h12, h22 = hessian[..., 0, 0], hessian[..., 0, 1], hessian[..., 1, 1]
    numerator = h11 * h2**2 - 2.0 * h1 * h2 * h12 + h22 * h1**2
    return -numerator / np.hypot(h1, h2) ** 3


def _level_point(level: float, angle: float) -> np.ndarray:
    """Point of {H = level} in Q on the ray from the cell centre at the given angle."""
    direction = np.array([np.cos(angle), np.sin(angle)])
    center = np.asarray(CELL_CENTER)
    # Distance from the centre to the boundary of Q along the ray.
    reach = (np.pi / 2) / max(abs(direction[0]), abs(direction[1]))
    radius = brentq(lambda rho: stream(center + rho * direction) - level, 0.0, reach)
    return center + radius * direction


def stagnation_margin(r: float, d: float, n_samples: int = 256) -> float:
    """min over {H = 1 - r} in Q of d * kappa - 1; nonnegative means the front is stagnant."""
    if not 0.0 < r < 1.0:
        raise ValueError(f"r must lie in (0, 1), got {r}")
    angles = np.linspace(0.0, 2.0 * np.pi, n_samples, endpoint=False)
    points = np.array([_level_point(1.0 - r, angle) for angle in angles])
    return float(np.min(d * level_curvature(points)) - 1.0)


def stagnation_radius(d: float) -> float:
    """Largest r for which the initial front {H = 1 - r} does not move."""
    if d <= 0:
        return 0.0
    low, high = 1e-8, 1.0 - 1e-8
    if stagnation_margin(high, d) >= 0:
        return high
    return float(brentq(lambda r: stagnation_margin(r, d), low, high, xtol=1e-10))


def max_speed_radius(flow: CellularFlow, center, bound: float = 0.25, start: float = 1.0) -> float:
    """Largest dyadic radius 2**-k * start on whose disk |V| <= bound."""
    center = np.asarray(center, dtype=float)
    radial = np.linspace(0.0, 1.0, 17)
    angular = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
    offsets = np.stack(
        [np.outer(radial, np.cos(angular)), np.outer(radial, np.sin(angular))], axis=-1
    )

    radius = start
    for _ in range(60):
        speeds = np.linalg.norm(velocity(flow, center + radius * offsets), axis=-1)
        if speeds.max() <= bound:
            return radius
        radius /= 2.0
    logger.warning(f"No dyadic radius keeps |V| <= {bound} around {center.tolist()}")
    return radius
