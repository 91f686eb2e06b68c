"""Forward simulation of game trajectories and reachability measurements."""

import dataclasses
import logging
from typing import Callable, Dict, Optional, Sequence

import numpy as np
from scipy import stats

from models.flow import Box
from models.game import GameParams
from models.trajectory import CrossingReport, ReachReport, SpreadReport, Trajectory
from services.flowfield import stream, stream_gradient
from services.game import game_steps, step_position
from services.strategies import (
    Exit,
    Fixed,
    OpposeAxis,
    OpposeDisplacement,
    StrategyI,
    StrategyII,
)

logger = logging.getLogger(__name__)

Stop = Callable[[np.ndarray], bool]


def run(
    x0: Sequence[float],
    strategy_i: StrategyI,
    strategy_ii: StrategyII,
    params: GameParams,
    stop: Optional[Stop] = None,
) -> Trajectory:
    """Play up to params.n_steps moves from x0.

    The stop predicate is checked before every move; the run ends as soon as it holds.
    """
    x = np.asarray(x0, dtype=float)
    strategy_i.reset(x)
    strategy_ii.reset(x)

    points = [x]
    etas = []
    signs = []
    reason = "budget"
    for _ in range(params.n_steps):
        if stop is not None and stop(x):
            reason = "stop"
            break
        eta = np.asarray(strategy_i.choose(x), dtype=float)
        b = strategy_ii.choose(x, eta, params)
        x = step_position(x, eta, b, params)
        points.append(x)
        etas.append(eta)
        signs.append(b)
    else:
        if stop is not None and stop(x):
            reason = "stop"

    return Trajectory(
        points=np.array(points),
        etas=np.array(etas).reshape(-1, 2),
        signs=np.array(signs, dtype=int),
        tau=params.tau,
        meta={
            "player_i": strategy_i.name,
            "player_ii": strategy_ii.name,
            "events": list(strategy_i.events),
            "stop_reason": reason,
        },
    )


def descent_level_ode(s0: float, t: float) -> float:
    """Solution of s' = -sqrt(2 s (1 - s)), s(0) = s0, held at 0 once reached.

    Raises:
        ValueError: If s0 is outside (0, 1].
    """
    if not 0 < s0 <= 1:
        raise ValueError(f"s0 must lie in (0, 1], got {s0}")
    angle = max(np.arcsin(np.sqrt(s0)) - t / np.sqrt(2.0), 0.0)
    return float(np.sin(angle) ** 2)


def measure_reach(
    start: Sequence[float],
    target,
    strategy_i: StrategyI,
    strategy_ii: StrategyII,
    params: GameParams,
    budget: float,
) -> ReachReport:
    """Run until the trajectory enters `target` or the time budget runs out.

    Args:
        target: Any region with contains(x) and label().
        budget: Game time allowed; converted to ceil(budget / tau^2) steps.
    """
    if not np.isfinite(budget):
        raise ValueError("budget must be finite")
    steps = game_steps(budget, params.tau)
    trajectory = run(start, strategy_i, strategy_ii, dataclasses.replace(params, n_steps=steps), target.contains)
    success = target.contains(trajectory.final)
    logger.info(
        f"Reach {target.label()} from ({start[0]:.4f}, {start[1]:.4f}): "
        f"{'success' if success else 'failed'} after {trajectory.steps} steps ({trajectory.duration:.4f})"
    )
    return ReachReport(
        start=(float(start[0]), float(start[1])),
        target=target.label(),
        steps_used=trajectory.steps,
        time_used=trajectory.duration,
        success=success,
        adversary=strategy_ii.name,
        final=(float(trajectory.final[0]), float(trajectory.final[1])),
        trajectory=trajectory,
    )


def crossing_defense(
    start: Sequence[float],
    gamma: np.ndarray,
    window: Box,
    strategy_i: StrategyI,
    params: GameParams,
) -> CrossingReport:
    """Player I heads for `window` while Player II plays b eta_1 <= 0.

    Args:
        start: Starting point below the curve.
        gamma: Polyline (k, 2) sorted by x1; the lower component lies beneath it.
        window: Target window on the far side of the curve.
    """
    gamma = np.asarray(gamma, dtype=float)

    def above(x):
        return x[1] > np.interp(x[0], gamma[:, 0], gamma[:, 1])

    trajectory = run(start, strategy_i, OpposeAxis((1.0, 0.0)), params, window.contains)
    points = trajectory.points
    bound = params.flow.max_speed + 1.0

    if trajectory.steps == 0:
        return CrossingReport(0.0, 0.0, bound, False, window.contains(points[0]), False, 0)

    horizontal = np.diff(points[:, 0])
    max_step_rate = float(np.max(horizontal) / params.dt)
    mean_rate = float((points[-1, 0] - points[0, 0]) / trajectory.duration)

    crossing = next((k for k, x in enumerate(points) if above(x)), None)
    entry = next((k for k, x in enumerate(points) if window.contains(x)), None)
    crossed_first = crossing is not None and (entry is None or crossing <= entry)
    return CrossingReport(
        max_step_rate=max_step_rate,
        mean_rate=mean_rate,
        bound=bound,
        crossed_curve=crossing is not None,
        entered_window=entry is not None,
        crossed_first=crossed_first,
        steps=trajectory.steps,
    )


def measure_exit_spread(x0: Sequence[float], params: GameParams, horizon: float, player: str = "I") -> SpreadReport:
    """Fit max_n |x_n - x0| <= C (sqrt(t_n) + t_n) for an exit strategy.

    With player "I" the exit strategy faces Fixed(+1); with "II" Player II
    opposes the displacement while Player I plays Exit about a far-away center.
    """
    steps = game_steps(horizon, params.tau)
    run_params = dataclasses.replace(params, n_steps=steps)
    if player == "I":
        trajectory = run(x0, Exit(), Fixed(1), run_params)
    elif player == "II":
        far = np.asarray(x0, dtype=float) + np.array([0.0, 10.0])
        trajectory = run(x0, Exit(far), OpposeDisplacement(), run_params)
    else:
        raise ValueError(f"player must be 'I' or 'II', got {player!r}")

    radii = np.hypot(*(trajectory.points - trajectory.points[0]).T)
    times = np.arange(len(radii)) * params.dt
    scale = np.sqrt(times[1:]) + times[1:]
    constant = float(np.max(radii[1:] / scale)) if len(scale) else 0.0
    return SpreadReport(constant=constant, max_radius=float(radii.max()), horizon=horizon, player=player)


def descent_defect(trajectory: Trajectory) -> float:
    """K = max_n (H(x_{n+1}) - H(x_n) + |DH(x_n)| tau^2) / tau^3 over a descent run in H > 0."""
    points = trajectory.points
    if len(points) < 2:
        return 0.0
    tau = trajectory.tau
    levels = stream(points)
    slopes = np.hypot(*stream_gradient(points[:-1]).T)
    return float(np.max((np.diff(levels) + slopes * tau**2) / tau**3))


def fit_reach_times(mus: Sequence[float], times: Sequence[float]) -> Dict[str, float]:
    """Constant C = max T / (|log mu| + 1) and the linear trend of T in |log mu|."""
    logs = np.abs(np.log(np.asarray(mus, dtype=float)))
    times = np.asarray(times, dtype=float)
    constant = float(np.max(times / (logs + 1.0)))
    fit = stats.linregress(logs, times)
    return {
        "C": constant,
        "slope": float(fit.slope),
        "intercept": float(fit.intercept),
        "r_squared": float(fit.rvalue**2),
    }


def level_trace(trajectory: Trajectory) -> np.ndarray:
    """H along the trajectory."""
    return stream(trajectory.points)


def ode_envelope_gap(trajectory: Trajectory) -> float:
    """max_n H(x_n) - s(n tau^2), with s the descent level ODE from H(x_0)."""
    levels = level_trace(trajectory)
    s0 = float(np.clip(levels[0], 1e-300, 1.0))
    times = np.arange(len(levels)) * trajectory.tau**2
    envelope = np.array([descent_level_ode(s0, t) for t in times])
    return float(np.max(levels - envelope))
