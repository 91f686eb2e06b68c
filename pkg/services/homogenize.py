"""Estimators of the effective burning velocity H_A(p) and their cross-checks.

Three independent routes:

- front speed: evolve the corrector from w = 0 and read the slope of mean w in time;
- discounted: solve lambda v + F(v) = 0 for decreasing lambda and read -lambda v;
- game: run the backward DP from g(x) = p.x and read the value drift.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from tqdm import tqdm

from models.flow import CellularFlow
from models.grid import Grid2
from models.game import GameParams, ValueGrid
from models.hbar_estimate import ContinuityReport, GrowthLawFit, HbarEstimate, Method, Resolution
from models.state import CorrectorState
from services import game, levelset_pde

logger = logging.getLogger(__name__)


def hbar_front_speed(
    p,
    A: float,
    d: float,
    grid: int,
    T: float,
    burn_in: float,
    checkpoint_every: float = 1.0,
    eps_factor: float = 1.0,
    progress: bool = False,
) -> HbarEstimate:
    """H = -(mean w(T) - mean w(burn_in)) / (T - burn_in).

    The error indicator is the largest spatial oscillation of w after burn-in.
    """
    if T <= burn_in:
        raise ValueError(f"T must exceed burn_in, got T={T}, burn_in={burn_in}")
    state = CorrectorState.flat(grid, p, d, CellularFlow(A))
    eps = eps_factor * state.w.h

    state, _ = levelset_pde.evolve(state, burn_in, eps=eps, progress=progress)
    start = state
    state, checkpoints = levelset_pde.evolve(start, T - burn_in, checkpoint_every, eps=eps, progress=progress)

    value = -(checkpoints[-1].mean_w - checkpoints[0].mean_w) / (T - burn_in)
    oscillations = [checkpoint.osc for checkpoint in checkpoints]
    midpoint = min(checkpoints, key=lambda checkpoint: abs(checkpoint.t - T / 2.0))
    drift = max(
        abs(checkpoint.mean_w - checkpoints[0].mean_w + value * (checkpoint.t - checkpoints[0].t))
        for checkpoint in checkpoints
    )
    logger.info(f"front_speed p={tuple(p)} A={A} d={d}: H={value:.6f} osc<={max(oscillations):.3e}")
    return HbarEstimate(
        p=(float(p[0]), float(p[1])),
        A=A,
        d=d,
        method=Method.FRONT_SPEED,
        value=float(value),
        discretization={"grid": grid, "T": T, "burn_in": burn_in, "eps_factor": eps_factor},
        error_indicator=float(max(oscillations)),
        extras={
            "osc_final": oscillations[-1],
            "osc_half": midpoint.osc,
            "corrector_bound": float(max(oscillations) + drift),
            "checkpoints": len(checkpoints),
        },
    )


def hbar_discounted(
    p,
    A: float,
    d: float,
    lambdas: Sequence[float],
    grid: int,
    tol: float = 1e-5,
    max_iterations: int = 500_000,
    eps_factor: float = 1.0,
) -> HbarEstimate:
    """-mean(lambda v) at the smallest lambda, warm-starting each solve from the previous one.

    The error indicator is the spread of -mean(lambda v) over the lambda list
    plus the spatial oscillation of lambda v at the smallest lambda.

    Raises:
        ValueError: If the lambdas are not positive and strictly decreasing.
        ConvergenceError: If a solve runs out of iterations.
    """
    lambdas = [float(lam) for lam in lambdas]
    if not lambdas or any(lam <= 0 for lam in lambdas):
        raise ValueError(f"lambdas must be positive, got {lambdas}")
    if any(later >= earlier for earlier, later in zip(lambdas, lambdas[1:])):
        raise ValueError(f"lambdas must be strictly decreasing, got {lambdas}")

    flow = CellularFlow(A)
    eps = eps_factor * 2.0 * np.pi / grid
    values: List[float] = []
    iterations: List[int] = []
    peak = 0.0
    initial: Optional[Grid2] = None
    previous = None
    for lam in lambdas:
        if previous is not None:
            initial = Grid2(previous.v.values * (previous.lam / lam))
        solution = levelset_pde.solve_discounted(p, d, flow, lam, grid, tol, max_iterations, eps, initial)
        scaled = solution.scaled
        values.append(float(-scaled.mean()))
        iterations.append(solution.iterations)
        peak = max(peak, float(np.max(np.abs(scaled))))
        previous = solution

    oscillation = float(np.ptp(previous.scaled))
    value = values[-1]
    logger.info(f"discounted p={tuple(p)} A={A} d={d}: H={value:.6f} over lambdas {lambdas}")
    return HbarEstimate(
        p=(float(p[0]), float(p[1])),
        A=A,
        d=d,
        method=Method.DISCOUNTED,
        value=value,
        discretization={"grid": grid, "lambdas": " ".join(f"{lam:g}" for lam in lambdas), "tol": tol},
        error_indicator=float(max(values) - min(values)) + oscillation,
        extras={"per_lambda": values, "iterations": iterations, "max_abs_scaled": peak},
    )


def hbar_game(
    p,
    A: float,
    d: float,
    tau: float,
    T: float,
    grid: int,
    n_angles: int = 64,
    n_radii: int = 3,
    cap: Optional[int] = None,
    progress: bool = False,
    interpolation_order: int = 3,
    burn_in: float = 0.0,
) -> HbarEstimate:
    """Value drift of the backward game from g(x) = p.x over N = ceil(T / tau^2) steps.

    The first ceil(burn_in / tau^2) steps are run but left out of the drift.
    The error indicator is the oscillation of the periodic value divided by the elapsed time.
    """
    if not 0 <= burn_in < T:
        raise ValueError(f"burn_in must lie in [0, T), got T={T}, burn_in={burn_in}")
    flow = CellularFlow(A)

    def params(n_steps: int) -> GameParams:
        return GameParams(tau, d, n_steps, flow, n_angles, n_radii, interpolation_order=interpolation_order)

    total = game.game_steps(T, tau, cap)
    discarded = min(game.game_steps(burn_in, tau), total - 1) if burn_in > 0 else 0
    start = game.dp_backward(p, params(discarded), grid, progress=progress)
    measured = params(total - discarded)
    final = game.dp_backward(p, measured, grid, progress=progress, initial=start.base)
    value = game.speed_from_value(final, measured) + start.base.mean() / measured.total_time
    value_grid = ValueGrid(final.base, final.p, total)
    elapsed = total * tau**2
    logger.info(f"game p={tuple(p)} A={A} d={d}: H={value:.6f} after {total} steps, {discarded} discarded")
    return HbarEstimate(
        p=(float(p[0]), float(p[1])),
        A=A,
        d=d,
        method=Method.GAME,
        value=float(value),
        discretization={
            "grid": grid,
            "tau": tau,
            "T": elapsed,
            "burn_in": discarded * tau**2,
            "n_steps": total,
            "n_angles": n_angles,
            "n_radii": n_radii,
            "interpolation_order": interpolation_order,
        },
        error_indicator=float(value_grid.base.oscillation() / elapsed),
        extras={"value_grid": value_grid},
    )


def estimate(method: Method, p, A: float, d: float, resolution: Resolution) -> HbarEstimate:
    """Dispatch one estimate at the given resolution."""
    method = Method(method)
    if method is Method.FRONT_SPEED:
        return hbar_front_speed(
            p, A, d, resolution.grid, resolution.T, resolution.burn_in,
            resolution.checkpoint_every, resolution.eps_factor,
        )
    if method is Method.DISCOUNTED:
        return hbar_discounted(
            p, A, d, resolution.lambdas, resolution.grid,
            resolution.tol, resolution.max_iterations, resolution.eps_factor,
        )
    return hbar_game(
        p, A, d, resolution.tau, resolution.game_T, resolution.game_grid,
        resolution.n_angles, resolution.n_radii, resolution.game_cap,
        burn_in=resolution.game_burn_in,
    )


def _run_jobs(jobs: List[Tuple[Method, Tuple[float, float], float, float]], resolution: Resolution, workers: int, desc: str):
    def run_job(job):
        method, p, A, d = job
        return estimate(method, p, A, d, resolution)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        return list(tqdm(executor.map(run_job, jobs), total=len(jobs), desc=desc, unit="job", leave=False))


def sweep(
    p,
    d: float,
    A_list: Sequence[float],
    methods: Sequence[Method] = (Method.FRONT_SPEED,),
    resolution: Resolution = Resolution(),
    workers: int = 4,
) -> List[HbarEstimate]:
    """Estimate H for every (A, method) pair, ordered by A then method.

    Raises:
        ValueError: If A_list is not strictly increasing.
    """
    A_list = [float(A) for A in A_list]
    if any(later <= earlier for earlier, later in zip(A_list, A_list[1:])):
        raise ValueError(f"A_list must be strictly increasing, got {A_list}")
    p = (float(p[0]), float(p[1]))
    jobs = [(Method(method), p, A, d) for A in A_list for method in methods]
    logger.info(f"Sweep over A={A_list} with {len(jobs)} jobs on {workers} workers")
    return _run_jobs(jobs, resolution, workers, "Sweep")


def fit_growth_law(estimates: Sequence[HbarEstimate]) -> GrowthLawFit:
    """Constants C with H = A pi |p|_1 / (2 log A + C) and the trend of H log A / A in log A.

    Only amplitudes A > 1 enter the fit.

    Raises:
        ValueError: With fewer than two usable estimates.
    """
    usable = [estimate for estimate in estimates if estimate.A > 1 and estimate.valid]
    if len(usable) < 2:
        raise ValueError("growth-law fit needs at least two valid estimates with A > 1")
    amplitudes = np.array([estimate.A for estimate in usable])
    values = np.array([estimate.value for estimate in usable])
    taxicab = np.array([abs(estimate.p[0]) + abs(estimate.p[1]) for estimate in usable])
    logs = np.log(amplitudes)

    implied = amplitudes * np.pi * taxicab / values - 2.0 * logs
    fit = stats.linregress(logs, values * logs / amplitudes)
    return GrowthLawFit(
        c_lower=float(implied.min()),
        c_upper=float(implied.max()),
        implied=[float(c) for c in implied],
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        r_squared=float(fit.rvalue**2),
    )


def continuity_probe(
    p_list: Sequence[Sequence[float]],
    A: float,
    d: float,
    method: Method = Method.FRONT_SPEED,
    resolution: Resolution = Resolution(),
    workers: int = 4,
) -> ContinuityReport:
    """Adjacent differences of H along p_list; gaps above 3x the median gap are flagged."""
    jobs = [(Method(method), (float(p[0]), float(p[1])), A, d) for p in p_list]
    values = [estimate.value for estimate in _run_jobs(jobs, resolution, workers, "Continuity")]
    gaps = [abs(later - earlier) for earlier, later in zip(values, values[1:])]
    if not gaps:
        return ContinuityReport(values, [], 0.0, 0.0, [])
    median = float(np.median(gaps))
    jumps = [index for index, gap in enumerate(gaps) if gap > 3.0 * median + 1e-12]
    return ContinuityReport(values, gaps, float(max(gaps)), median, jumps)


def transition_lower_bound(beta: float) -> float:
    """gamma = pi / (2 beta): the speed certified by a cell transition within time beta."""
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    return float(np.pi / (2.0 * beta))


def eps_sensitivity(
    p,
    A: float,
    d: float,
    grid: int,
    T: float,
    burn_in: float,
    factors: Sequence[float] = (0.5, 1.0, 2.0),
) -> Dict[float, float]:
    """Front-speed estimates for curvature regularizations eps = factor * h."""
    return {
        factor: hbar_front_speed(p, A, d, grid, T, burn_in, eps_factor=factor).value for factor in factors
    }


def control_refinement(
    p,
    A: float,
    d: float,
    tau: float,
    T: float,
    grid: int,
    levels: Sequence[Tuple[int, int]] = ((16, 2), (32, 3), (64, 5)),
) -> List[Dict[str, float]]:
    """Game speeds for successive control sets and the change at each refinement."""
    rows: List[Dict[str, float]] = []
    previous = None
    for n_angles, n_radii in levels:
        value = hbar_game(p, A, d, tau, T, grid, n_angles, n_radii).value
        rows.append(
            {
                "n_angles": n_angles,
                "n_radii": n_radii,
                "hbar": value,
                "change": float("nan") if previous is None else abs(value - previous),
            }
        )
        previous = value
    return rows


def relative_disagreement(estimates: Sequence[HbarEstimate]) -> float:
    """Largest pairwise |a - b| / max(|a|, |b|) among the estimates."""
    values = [estimate.value for estimate in estimates]
    worst = 0.0
    for i, a in enumerate(values):
        for b in values[i + 1:]:
            scale = max(abs(a), abs(b))
            if scale > 0:
                worst = max(worst, abs(a - b) / scale)
    return worst
