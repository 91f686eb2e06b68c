"""The two-player game behind the curvature G-equation.

Player I picks eta in the closed unit ball, Player II a sign b, and the
position moves by

    x_{n+1} = x_n + tau sqrt(2d) b eta + tau^2 |eta| eta_perp - tau^2 V(x_n),

with eta_perp = (-eta_2, eta_1). Values are computed backward from affine
terminal data g(x) = p.x and stored as a periodic grid plus the offset p.x.
"""

import logging
from typing import Optional, Tuple

import numpy as np
from scipy import ndimage
from tqdm import tqdm

from models.errors import GflameError, NumericalError
from models.game import ConsistencyReport, GameParams, ValueGrid
from models.grid import Grid2
from services.flowfield import velocity

logger = logging.getLogger(__name__)

ETA_TOLERANCE = 1e-12
SPATIAL_DIMENSION = 2


def perp(v) -> np.ndarray:
    """(a, c) -> (-c, a) along the last axis."""
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def step_position(x, eta, b: int, params: GameParams) -> np.ndarray:
    """One move of the game.

    Raises:
        ValueError: If |eta| exceeds 1 beyond rounding, or b is not +-1.
    """
    eta = np.asarray(eta, dtype=float)
    x = np.asarray(x, dtype=float)
    size = float(np.hypot(eta[0], eta[1]))
    if size > 1.0 + ETA_TOLERANCE:
        raise ValueError(f"|eta| must not exceed 1, got {size}")
    if b not in (-1, 1):
        raise ValueError(f"b must be +1 or -1, got {b}")
    tau = params.tau
    return (
        x
        + tau * params.diffusion * b * eta
        + tau**2 * size * perp(eta)
        - tau**2 * velocity(params.flow, x)
    )


def control_set(params: GameParams, slope=None) -> np.ndarray:
    """Discrete controls: eta = 0, every nonzero radius times the uniform angles,
    and, when aligned, the two unit directions perpendicular to `slope`."""
    radii = params.radii()[1:]
    angles = np.linspace(0.0, 2.0 * np.pi, params.n_angles, endpoint=False)
    directions = np.stack([np.cos(angles), np.sin(angles)], axis=-1)

    if params.align_controls and slope is not None and np.hypot(*slope) > 0:
        normal = np.asarray(slope, dtype=float) / np.hypot(*slope)
        tangent = perp(normal)
        directions = np.vstack([directions, tangent, -tangent])

    controls = (radii[:, None, None] * directions[None, :, :]).reshape(-1, 2)
    return np.vstack([np.zeros((1, 2)), controls])


def operator_value(hessian, gradient, d: float) -> float:
    """F(X, p) = (|p| - d p_perp.X.p_perp / |p|^2)_+ for p != 0."""
    gradient = np.asarray(gradient, dtype=float)
    norm = float(np.hypot(*gradient))
    if norm == 0:
        raise ValueError("F is set-valued at p = 0; use operator_envelopes")
    tangent = perp(gradient)
    curvature_term = float(tangent @ np.asarray(hessian, dtype=float) @ tangent) / norm**2
    return max(norm - d * curvature_term, 0.0)


def operator_envelopes(hessian, gradient, d: float) -> Tuple[float, float]:
    """Lower and upper semicontinuous envelopes of F.

    At p = 0 they are 0 and 2 d n ||X|| with ||X|| the spectral norm.
    """
    if np.hypot(*np.asarray(gradient, dtype=float)) > 0:
        value = operator_value(hessian, gradient, d)
        return value, value
    spectral = float(np.max(np.abs(np.linalg.eigvalsh(np.asarray(hessian, dtype=float)))))
    return 0.0, 2.0 * d * SPATIAL_DIMENSION * spectral


def consistency_residual(
    gradient, hessian, x, params: GameParams, slack: float = 0.05
) -> ConsistencyReport:
    """Exact min-max one-step increment of a quadratic test function.

    The increment over the discrete control set (aligned with the gradient)
    is scaled by tau^-2 and compared with -[F_lower + V.p, F_upper + V.p].
    """
    gradient = np.asarray(gradient, dtype=float)
    hessian = np.asarray(hessian, dtype=float)
    tau = params.tau
    controls = control_set(params, gradient)
    drift = velocity(params.flow, x)

    sizes = np.hypot(controls[:, 0], controls[:, 1])[:, None]
    worst = np.full(len(controls), -np.inf)
    for b in (-1, 1):
        displacement = tau * params.diffusion * b * controls + tau**2 * sizes * perp(controls) - tau**2 * drift
        increment = displacement @ gradient + 0.5 * np.einsum(
            "ki,ij,kj->k", displacement, hessian, displacement
        )
        worst = np.maximum(worst, increment)

    scaled = float(worst.min()) / tau**2
    lower_env, upper_env = operator_envelopes(hessian, gradient, params.d)
    shift = float(drift @ gradient)
    return ConsistencyReport(scaled, -upper_env - shift, -lower_env - shift, slack)


def _successor_tables(p, params: GameParams, n: int):
    """Index-space coordinates of every successor and the affine gain p.Delta.

    Returns arrays of shape (controls, 2, n, n): axis 1 runs over b = -1, +1.
    """
    grid = Grid2.zeros(n)
    x1, x2 = grid.coordinates()
    nodes = np.stack([x1, x2], axis=-1)
    drift = velocity(params.flow, nodes)

    controls = control_set(params, p)
    sizes = np.hypot(controls[:, 0], controls[:, 1])
    tau = params.tau

    deterministic = tau**2 * sizes[:, None] * perp(controls)
    signed = tau * params.diffusion * controls
    shifts = np.stack([deterministic - signed, deterministic + signed], axis=1)

    displacement = shifts[:, :, None, None, :] - tau**2 * drift[None, None, :, :, :]
    successors = nodes[None, None] + displacement
    coordinates = np.stack([successors[..., 0] / grid.h1, successors[..., 1] / grid.h2])
    gain = displacement @ np.asarray(p, dtype=float)
    return coordinates, gain


def dp_backward(
    p, params: GameParams, n: int, progress: bool = False, initial: Optional[Grid2] = None
) -> ValueGrid:
    """Backward min-max recursion from g(x) = p.x, or from initial + p.x, over params.n_steps steps.

    Successor values use a periodic spline lookup of the periodic part, cubic
    by default, and the exact affine offset. A bilinear lookup is monotone but
    adds an error of order h^2 / tau^2 per unit game time.

    Raises:
        NumericalError: If the interpolated values stop being finite.
    """
    p = (float(p[0]), float(p[1]))
    base = Grid2.zeros(n).values if initial is None else initial.values.copy()
    if base.shape != (n, n):
        raise ValueError(f"initial grid has shape {base.shape}, expected {(n, n)}")
    if params.n_steps == 0:
        return ValueGrid(Grid2(base), p, 0)

    coordinates, gain = _successor_tables(p, params, n)
    shape = gain.shape
    flat = coordinates.reshape(2, -1)

    logger.info(
        f"Game DP: {params.n_steps} steps on {n}x{n}, {shape[0]} controls, tau={params.tau}"
    )
    for _ in tqdm(range(params.n_steps), desc="Game DP", unit="step", leave=False, disable=not progress):
        successors = ndimage.map_coordinates(
            base, flat, order=params.interpolation_order, mode="grid-wrap"
        ).reshape(shape)
        candidate = (successors + gain).max(axis=1).min(axis=0)
        if not np.all(np.isfinite(candidate)):
            raise NumericalError("non-finite game values", "game")
        base = candidate

    return ValueGrid(Grid2(base), p, params.n_steps)


def speed_from_value(value: ValueGrid, params: GameParams) -> float:
    """-mean(base) / (k tau^2), the slope of p.x - u in time."""
    if value.k == 0:
        raise GflameError("speed_from_value needs at least one game step", "game")
    return -value.base.mean() / (value.k * params.tau**2)


def game_steps(total_time: float, tau: float, cap: Optional[int] = None) -> int:
    """N = ceil(T / tau^2), optionally capped."""
    steps = int(np.ceil(total_time / tau**2 - 1e-9))
    return min(steps, cap) if cap else steps
