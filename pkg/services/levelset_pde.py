"""Explicit finite differences for the curvature G-equation in corrector form.

The solver evolves the periodic part w of G(x, t) = p.x + w(x, t) on the torus
[0, 2*pi)^2 under

    w_t = -[(1 - d * kappa)_+ |p + Dw| + V.(p + Dw)],

discretized as (|DG|_Godunov - d kappa |DG|)_+ with kappa |DG| from central
differences, regularized by eps, and first-order upwinding for the drift.
Writing the curvature term as kappa |DG| keeps its diffusion coefficient at
most d where the central gradient vanishes but one-sided differences do not.
"""

import logging
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
from skimage import measure
from tqdm import tqdm

from models.errors import CFLViolation, ConvergenceError, NumericalError
from models.flow import CellularFlow, wrap
from models.grid import TWO_PI, Grid2
from models.state import Checkpoint, CorrectorState, DiscountedState
from services.flowfield import stream, velocity_components

logger = logging.getLogger(__name__)

CFL_SAFETY = 0.4
RELAXATION = 0.5


@lru_cache(maxsize=32)
def _velocity_on_grid(amplitude: float, n1: int, n2: int) -> Tuple[np.ndarray, np.ndarray]:
    x1, x2 = Grid2.zeros(n1, n2).coordinates()
    v1, v2 = velocity_components(CellularFlow(amplitude), x1, x2)
    v1.setflags(write=False)
    v2.setflags(write=False)
    return v1, v2


def stable_dt(grid: Grid2, flow: CellularFlow, p, d: float, safety: float = CFL_SAFETY) -> float:
    """dt = safety * min(h^2 / (4d), h / (1 + A + |p|))."""
    h = min(grid.h1, grid.h2)
    hyperbolic = h / (1.0 + flow.amplitude + float(np.hypot(*p)))
    parabolic = h * h / (4.0 * d) if d > 0 else np.inf
    return safety * min(parabolic, hyperbolic)


def _check_finite(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise NumericalError(f"non-finite values in {what}", "levelset_pde")


def _curvature_parts(w: np.ndarray, p, h1: float, h2: float):
    """Central gradient of G and the numerator g11 g2^2 - 2 g1 g2 g12 + g22 g1^2."""
    east, west = np.roll(w, -1, axis=0), np.roll(w, 1, axis=0)
    north, south = np.roll(w, -1, axis=1), np.roll(w, 1, axis=1)

    g1 = p[0] + (east - west) / (2.0 * h1)
    g2 = p[1] + (north - south) / (2.0 * h2)
    g11 = (east - 2.0 * w + west) / h1**2
    g22 = (north - 2.0 * w + south) / h2**2
    g12 = (
        np.roll(east, -1, axis=1)
        - np.roll(east, 1, axis=1)
        - np.roll(west, -1, axis=1)
        + np.roll(west, 1, axis=1)
    ) / (4.0 * h1 * h2)

    numerator = g11 * g2**2 - 2.0 * g1 * g2 * g12 + g22 * g1**2
    return g1**2 + g2**2, numerator


def _curvature(w: np.ndarray, p, h1: float, h2: float, eps: float) -> np.ndarray:
    squared, numerator = _curvature_parts(w, p, h1, h2)
    return numerator / (squared + eps**2) ** 1.5


def _tangential_laplacian(w: np.ndarray, p, h1: float, h2: float, eps: float) -> np.ndarray:
    """kappa |DG|, the second-order part of the curvature term.

    Its coefficient matrix (I - n n^T) |DG|^2 / (|DG|^2 + eps^2) has trace at
    most 1, so it stays bounded where the central gradient vanishes.
    """
    squared, numerator = _curvature_parts(w, p, h1, h2)
    return numerator / (squared + eps**2)


def curvature_field(state: CorrectorState, eps: Optional[float] = None) -> Grid2:
    """kappa = div(DG/|DG|) at every node, with |DG| regularized by eps (default h).

    Raises:
        NumericalError: If the corrector holds non-finite values.
    """
    w = state.w
    _check_finite(w.values, "corrector")
    eps = w.h if eps is None else eps
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return Grid2(_curvature(w.values, state.p, w.h1, w.h2, eps))


def _one_sided(w: np.ndarray, p, h1: float, h2: float):
    """Backward and forward differences of G = p.x + w along both axes."""
    back1 = p[0] + (w - np.roll(w, 1, axis=0)) / h1
    fwd1 = p[0] + (np.roll(w, -1, axis=0) - w) / h1
    back2 = p[1] + (w - np.roll(w, 1, axis=1)) / h2
    fwd2 = p[1] + (np.roll(w, -1, axis=1) - w) / h2
    return back1, fwd1, back2, fwd2


def _operator(
    w: np.ndarray, p, d: float, amplitude: float, h1: float, h2: float, eps: float
) -> np.ndarray:
    """(|p + Dw|_Godunov - d kappa |DG|)_+ + V.(p + Dw)_upwind at every node.

    For |DG| > 0 the first term equals (1 - d kappa)_+ |DG|.
    """
    back1, fwd1, back2, fwd2 = _one_sided(w, p, h1, h2)

    burning = np.sqrt(
        np.maximum(back1, 0.0) ** 2
        + np.minimum(fwd1, 0.0) ** 2
        + np.maximum(back2, 0.0) ** 2
        + np.minimum(fwd2, 0.0) ** 2
    )
    if d > 0:
        burning = np.maximum(burning - d * _tangential_laplacian(w, p, h1, h2, eps), 0.0)

    v1, v2 = _velocity_on_grid(float(amplitude), *w.shape)
    drift = v1 * np.where(v1 > 0, back1, fwd1) + v2 * np.where(v2 > 0, back2, fwd2)
    return burning + drift


def step(state: CorrectorState, dt: float, eps: Optional[float] = None) -> CorrectorState:
    """Advance the corrector by one explicit Euler step.

    Args:
        state: Current corrector.
        dt: Time step; must not exceed the stable bound.
        eps: Gradient regularization of the curvature term, default h.

    Returns:
        CorrectorState: The advanced state; the input is left untouched.

    Raises:
        CFLViolation: If dt exceeds the admissible step.
        NumericalError: If the input or the update holds non-finite values.
    """
    w = state.w
    admissible = stable_dt(w, state.flow, state.p, state.d)
    if dt > admissible * (1.0 + 1e-12):
        raise CFLViolation(dt, admissible)
    _check_finite(w.values, "corrector")

    eps = w.h if eps is None else eps
    rate = _operator(w.values, state.p, state.d, state.flow.amplitude, w.h1, w.h2, eps)
    updated = w.values - dt * rate
    _check_finite(updated, "updated corrector")
    return state.advanced(updated, dt)


def evolve(
    state: CorrectorState,
    T: float,
    checkpoint_every: Optional[float] = None,
    eps: Optional[float] = None,
    progress: bool = False,
) -> Tuple[CorrectorState, List[Checkpoint]]:
    """March the corrector forward by T, landing exactly on checkpoint times.

    Args:
        state: Initial corrector.
        T: Duration to add to state.t.
        checkpoint_every: Spacing of checkpoints; only the end points when None.
        eps: Curvature regularization, default h.
        progress: Show a tqdm bar.

    Returns:
        The final state and the checkpoints, the initial one included.
    """
    if T < 0:
        raise ValueError(f"T must be non-negative, got {T}")
    checkpoints = [Checkpoint.of(state)]
    if T == 0:
        return state, checkpoints

    dt_max = stable_dt(state.w, state.flow, state.p, state.d)
    every = checkpoint_every if checkpoint_every and checkpoint_every > 0 else T
    marks = [k * every for k in range(1, int(np.ceil(T / every - 1e-9)))] + [T]
    start = state.t
    elapsed = 0.0

    with tqdm(total=len(marks), desc="Evolving", unit="ckpt", leave=False, disable=not progress) as bar:
        for mark in marks:
            while mark - elapsed > 1e-12 * T:
                dt = min(dt_max, mark - elapsed)
                state = step(state, dt, eps)
                elapsed += dt
            elapsed = mark
            state = CorrectorState(state.w, state.p, state.d, state.flow, start + mark)
            checkpoints.append(Checkpoint.of(state))
            bar.update(1)

    return state, checkpoints


def extract_front(grid: Grid2, level: float = 0.0) -> List[np.ndarray]:
    """Marching-squares polylines of {G = level} in torus coordinates.

    The grid is wrapped by one row and column so fronts crossing the seam
    are kept; vertices lie in [0, 2*pi]^2.
    """
    values = grid.values
    if not np.all(np.isfinite(values)):
        raise NumericalError("non-finite values passed to extract_front", "levelset_pde")
    padded = np.pad(values, ((0, 1), (0, 1)), mode="wrap")
    contours = measure.find_contours(padded, level)
    return [contour * np.array([grid.h1, grid.h2]) for contour in contours]


def solve_discounted(
    p,
    d: float,
    flow: CellularFlow,
    lam: float,
    n: int,
    tol: float = 1e-5,
    max_iterations: int = 500_000,
    eps: Optional[float] = None,
    initial: Optional[Grid2] = None,
    relaxation: float = RELAXATION,
) -> DiscountedState:
    """Damped pseudo-time march of v' = -[lambda v + F(v)] to its fixed point.

    Args:
        p: Slope of the affine part.
        d: Markstein number.
        flow: Cellular flow.
        lam: Discount factor, positive.
        n: Nodes per axis.
        tol: Stop once max |lambda v + F(v)| <= tol.
        max_iterations: Pseudo-time step budget.
        eps: Curvature regularization, default h.
        initial: Starting grid, zero by default.
        relaxation: Fraction of the stable pseudo-time step taken per update, in (0, 1].

    Raises:
        ConvergenceError: If the budget runs out; carries the residual history.
    """
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if not 0 < relaxation <= 1:
        raise ValueError(f"relaxation must lie in (0, 1], got {relaxation}")
    v = (initial or Grid2.zeros(n)).values.copy()
    grid = Grid2(v)
    eps = grid.h if eps is None else eps
    dtau = relaxation * stable_dt(grid, flow, p, d) / (1.0 + lam)

    residuals: List[float] = []
    residual = np.inf
    for iteration in range(1, max_iterations + 1):
        update = lam * v + _operator(v, p, d, flow.amplitude, grid.h1, grid.h2, eps)
        residual = float(np.max(np.abs(update)))
        if not np.isfinite(residual):
            raise NumericalError(f"discounted march diverged at lambda={lam}", "levelset_pde")
        if iteration % 1000 == 1:
            residuals.append(residual)
        if residual <= tol:
            residuals.append(residual)
            logger.debug(f"lambda={lam}: converged after {iteration} steps, residual {residual:.2e}")
            return DiscountedState(Grid2(v), lam, tuple(p), d, flow, iteration, residual, residuals)
        v = v - dtau * update

    residuals.append(residual)
    raise ConvergenceError(
        f"discounted march at lambda={lam} stalled at residual {residual:.3e} "
        f"after {max_iterations} steps",
        residuals,
    )


def comparison_violation(lower: CorrectorState, upper: CorrectorState, T: float) -> Tuple[float, int]:
    """Largest (w_lower - w_upper)_+ seen while marching both states in lockstep.

    Returns:
        The violation and the number of steps taken.
    """
    if (lower.p, lower.d, lower.flow) != (upper.p, upper.d, upper.flow):
        raise ValueError("comparison needs identical parameters")
    dt_max = stable_dt(lower.w, lower.flow, lower.p, lower.d)
    violation = max(float(np.max(lower.w.values - upper.w.values)), 0.0)
    elapsed, steps = 0.0, 0
    while T - elapsed > 1e-12:
        dt = min(dt_max, T - elapsed)
        lower, upper = step(lower, dt), step(upper, dt)
        elapsed += dt
        steps += 1
        violation = max(violation, float(np.max(lower.w.values - upper.w.values)))
    return violation, steps


def torus_distance(grid: Grid2, center) -> np.ndarray:
    """Minimum-image distance from every node to a point."""
    x1, x2 = grid.coordinates()
    return np.hypot(wrap(x1 - center[0], -np.pi), wrap(x2 - center[1], -np.pi))


def bump(grid: Grid2, center, amplitude: float, width: float) -> np.ndarray:
    """Compactly supported C^1 bump amplitude * (1 - (r/width)^2)_+^2."""
    r = torus_distance(grid, center)
    return amplitude * np.maximum(1.0 - (r / width) ** 2, 0.0) ** 2


def dependence_radius(
    state: CorrectorState,
    center,
    times: Sequence[float],
    amplitude: float = 0.5,
    width: float = 0.5,
    tol: float = 1e-6,
) -> List[Tuple[float, float]]:
    """Radius around `center` outside which a bump perturbation has no effect above tol.

    Returns:
        (t, radius) pairs; radius is measured from the bump centre.
    """
    perturbed = CorrectorState(
        Grid2(state.w.values + bump(state.w, center, amplitude, width)),
        state.p,
        state.d,
        state.flow,
        state.t,
    )
    distance = torus_distance(state.w, center)
    radii = []
    base, moved, elapsed = state, perturbed, 0.0
    for t in sorted(times):
        base, _ = evolve(base, t - elapsed)
        moved, _ = evolve(moved, t - elapsed)
        elapsed = t
        influenced = np.abs(moved.w.values - base.w.values) > tol
        radii.append((t, float(distance[influenced].max()) if influenced.any() else 0.0))
    return radii


def signed_distance_circle(n: int, center, radius: float) -> Grid2:
    """G = |x - c| - R with the minimum-image distance."""
    grid = Grid2.zeros(n)
    return Grid2(torus_distance(grid, center) - radius)


def stagnant_front_data(n: int, r: float) -> Grid2:
    """G = (1 - r) - H, burnt where H > 1 - r."""
    grid = Grid2.zeros(n)
    x1, x2 = grid.coordinates()
    return Grid2((1.0 - r) - stream(np.stack([x1, x2], axis=-1)))


def rectangle_arctan_data(n: int, origin, size: float = 1.0) -> Grid2:
    """g = -/+ (2/pi) arctan(dist(x, boundary of S)), negative inside S = origin + (0, size)^2."""
    grid = Grid2.zeros(n)
    x1, x2 = grid.coordinates()
    y1 = wrap(x1 - origin[0], -np.pi)
    y2 = wrap(x2 - origin[1], -np.pi)

    inside = (y1 > 0) & (y1 < size) & (y2 > 0) & (y2 < size)
    inner = np.minimum.reduce([y1, size - y1, y2, size - y2])
    dx = np.maximum.reduce([-y1, y1 - size, np.zeros_like(y1)])
    dy = np.maximum.reduce([-y2, y2 - size, np.zeros_like(y2)])
    outer = np.hypot(dx, dy)
    # Nodes on the boundary segments have zero distance either way.
    distance = np.where(inside, inner, outer)
    sign = np.where(inside, -1.0, 1.0)
    return Grid2(sign * (2.0 / np.pi) * np.arctan(distance))
