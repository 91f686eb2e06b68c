"""Ellipse supersolutions that push a burnt square across a no-flux edge.

A square S of side 1 is burnt at t = 0. Inside it sits the ellipse

    E(t) = {(y1 - a0 - nu)^2 / a(t)^2 + (y2 - theta)^2 / b(t)^2 < 1},
    a(t) = a0 + t/2,  b(t) = b0 - L t,

in coordinates y relative to the lower-left corner of S. With admissible
(a0, b0, L) the ellipse moves slower than the front, so its left tip
crosses the edge {y1 = 0} by t = min(2 a0, b0 / (2L)). The edge is placed
on the line x1 = pi, where V.(1, 0) = 0 for the cellular flow.
"""

import logging
from typing import Dict, Optional, Sequence

import numpy as np
from scipy import ndimage

from models.ellipse import ContainmentReport, ContainmentRow, EllipseEvolution, SupersolutionParams
from models.errors import AdmissibilityError
from models.flow import CellularFlow, wrap
from models.state import CorrectorState
from services import levelset_pde
from services.flowfield import velocity

logger = logging.getLogger(__name__)

SQUARE_ORIGIN = (np.pi, np.pi / 2.0 - 0.5)
CASE_SPLIT = np.sqrt(3.0) / 2.0
A0_SHARE = 0.5
L_SAFETY = 1.1


def ellipse_curvature(a: float, b: float, phi):
    """kappa = a b / (a^2 sin^2 phi + b^2 cos^2 phi)^(3/2)."""
    if a <= 0 or b <= 0:
        raise ValueError(f"semi-axes must be positive, got a={a}, b={b}")
    return a * b / (a**2 * np.sin(phi) ** 2 + b**2 * np.cos(phi) ** 2) ** 1.5


def ellipse_normal_velocity(a: float, b: float, da: float, db: float, phi):
    """v_n = (a' b cos^2 phi + a b' sin^2 phi) / sqrt(a^2 sin^2 phi + b^2 cos^2 phi)."""
    if a <= 0 or b <= 0:
        raise ValueError(f"semi-axes must be positive, got a={a}, b={b}")
    s2, c2 = np.sin(phi) ** 2, np.cos(phi) ** 2
    return (da * b * c2 + a * db * s2) / np.sqrt(a**2 * s2 + b**2 * c2)


def ellipse_normal(a: float, b: float, phi) -> np.ndarray:
    """Outward unit normal at (a cos phi, b sin phi), stacked on the last axis."""
    scale = np.sqrt(a**2 * np.sin(phi) ** 2 + b**2 * np.cos(phi) ** 2)
    return np.stack([b * np.cos(phi) / scale, a * np.sin(phi) / scale], axis=-1)


def check_admissible(params: SupersolutionParams) -> None:
    """Raise AdmissibilityError naming the first construction inequality that fails."""
    delta, M0, a0, b0, L = params.delta, params.M0, params.a0, params.b0, params.L
    if not 0 < delta < 0.5:
        raise AdmissibilityError("0 < delta < 1/2", f"delta={delta}")
    if not (a0 > 0 and b0 > 0 and L > 0):
        raise AdmissibilityError("a0, b0, L > 0", f"a0={a0}, b0={b0}, L={L}")
    if not 4.0 * a0 < b0:
        raise AdmissibilityError("4 a0 < b0", f"4 a0={4 * a0:.6g}, b0={b0:.6g}")
    curvature_term = 64.0 * a0 / b0**2 + 4.0 * np.sqrt(3.0) * M0 * a0 / b0
    if not curvature_term < 0.125:
        raise AdmissibilityError("64 a0/b0^2 + 4 sqrt(3) M0 a0/b0 < 1/8", f"lhs={curvature_term:.6g}")
    if not M0 * np.sin(4.0 * a0) < 0.125:
        raise AdmissibilityError("M0 sin(4 a0) < 1/8", f"lhs={M0 * np.sin(4 * a0):.6g}")
    lhs = 0.5 - 3.0 * L * a0 / (4.0 * b0)
    rhs = 1.0 - b0 / a0**2 - M0
    if not lhs < rhs:
        raise AdmissibilityError(
            "1/2 - 3 L a0/(4 b0) < 1 - b0/a0^2 - M0", f"lhs={lhs:.6g}, rhs={rhs:.6g}"
        )


def derive_supersolution_params(delta: float, flow: CellularFlow) -> SupersolutionParams:
    """Pick b0 = delta/2, the largest comfortable a0 and an L just above its threshold."""
    if not 0 < delta < 0.5:
        raise AdmissibilityError("0 < delta < 1/2", f"delta={delta}")
    M0 = flow.max_speed
    b0 = delta / 2.0
    a0 = A0_SHARE * 0.125 / (64.0 / b0**2 + 4.0 * np.sqrt(3.0) * M0 / b0)
    a0 = min(a0, b0 / 8.0)
    if M0 > 0:
        a0 = min(a0, A0_SHARE * np.arcsin(min(1.0, 0.125 / M0)) / 4.0)
    threshold = (4.0 * b0 / (3.0 * a0)) * (b0 / a0**2 + M0 - 0.5)
    L = L_SAFETY * threshold
    params = SupersolutionParams(delta=delta, M0=M0, a0=a0, b0=b0, L=L)
    check_admissible(params)
    logger.debug(f"Supersolution delta={delta}: a0={a0:.3e} b0={b0:.3e} L={L:.3e} t={params.t_max:.3e}")
    return params


def _phi_grid(n_phi: int) -> np.ndarray:
    phis = np.linspace(0.0, 2.0 * np.pi, n_phi, endpoint=False)
    split = np.arcsin(CASE_SPLIT)
    extra = np.array([split, np.pi - split, np.pi + split, 2.0 * np.pi - split])
    return np.sort(np.concatenate([phis, extra]))


def margin_at(
    ellipse: EllipseEvolution,
    flow: CellularFlow,
    t: float,
    phis: np.ndarray,
    origin: Sequence[float] = SQUARE_ORIGIN,
) -> np.ndarray:
    """1 - kappa + V.n - v_n at each angle of E(t)."""
    a, b = ellipse.a(t), ellipse.b(t)
    c1, c2 = ellipse.center()
    points = np.stack(
        [origin[0] + c1 + a * np.cos(phis), origin[1] + c2 + b * np.sin(phis)], axis=-1
    )
    flux = np.sum(velocity(flow, points) * ellipse_normal(a, b, phis), axis=-1)
    kappa = ellipse_curvature(a, b, phis)
    v_n = ellipse_normal_velocity(a, b, ellipse.da, ellipse.db, phis)
    return 1.0 - kappa + flux - v_n


def supersolution_margin(
    params: SupersolutionParams,
    flow: CellularFlow,
    n_phi: int = 720,
    n_t: int = 64,
    theta: float = 0.5,
    origin: Sequence[float] = SQUARE_ORIGIN,
) -> float:
    """Minimum of 1 - kappa + V.n - v_n over a (phi, t) grid on [0, t_max].

    The angles with |sin phi| = sqrt(3)/2 are always part of the grid.

    Raises:
        AdmissibilityError: If params break a construction inequality.
    """
    check_admissible(params)
    ellipse = params.ellipse(theta)
    phis = _phi_grid(n_phi)
    times = np.linspace(0.0, params.t_max, n_t)
    return float(min(margin_at(ellipse, flow, t, phis, origin).min() for t in times))


def bound_excesses(
    params: SupersolutionParams,
    flow: CellularFlow,
    n_phi: int = 720,
    n_t: int = 16,
    theta: float = 0.5,
    origin: Sequence[float] = SQUARE_ORIGIN,
) -> Dict[str, float]:
    """Largest excess over each case bound; non-positive values mean the bound holds.

    Keys: kappa_case1 (<= 64 a0/b0^2), kappa_case2 (<= b0/a0^2),
    vn_case1 (<= 1/2), vn_case2 (<= 1/2 - 3 L a0/(4 b0)) and flux (|V.n| < 1/4),
    the flux bound only where |sin phi| <= sqrt(3)/2.
    """
    ellipse = params.ellipse(theta)
    phis = _phi_grid(n_phi)
    steep = np.abs(np.sin(phis)) >= CASE_SPLIT - 1e-12
    flat = np.abs(np.sin(phis)) <= CASE_SPLIT + 1e-12
    excess = {key: -np.inf for key in ("kappa_case1", "kappa_case2", "vn_case1", "vn_case2", "flux")}
    a0, b0, L = params.a0, params.b0, params.L
    c1, c2 = ellipse.center()
    for t in np.linspace(0.0, params.t_max, n_t):
        a, b = ellipse.a(t), ellipse.b(t)
        kappa = ellipse_curvature(a, b, phis)
        v_n = ellipse_normal_velocity(a, b, ellipse.da, ellipse.db, phis)
        points = np.stack(
            [origin[0] + c1 + a * np.cos(phis), origin[1] + c2 + b * np.sin(phis)], axis=-1
        )
        flux = np.abs(np.sum(velocity(flow, points) * ellipse_normal(a, b, phis), axis=-1))
        excess["kappa_case1"] = max(excess["kappa_case1"], float(np.max(kappa[flat] - 64.0 * a0 / b0**2)))
        excess["kappa_case2"] = max(excess["kappa_case2"], float(np.max(kappa[steep] - b0 / a0**2)))
        excess["vn_case1"] = max(excess["vn_case1"], float(np.max(v_n[flat] - 0.5)))
        excess["vn_case2"] = max(
            excess["vn_case2"], float(np.max(v_n[steep] - (0.5 - 3.0 * L * a0 / (4.0 * b0))))
        )
        excess["flux"] = max(excess["flux"], float(np.max(flux[flat]) - 0.25))
    return excess


def _inside_ellipse(state: CorrectorState, ellipse: EllipseEvolution, t: float, shrink: float, origin) -> np.ndarray:
    a, b = ellipse.a(t) - shrink, ellipse.b(t) - shrink
    if a <= 0 or b <= 0:
        return np.zeros(state.w.shape, dtype=bool)
    x1, x2 = state.w.coordinates()
    c1, c2 = ellipse.center()
    y1 = wrap(x1 - origin[0], -np.pi) - c1
    y2 = wrap(x2 - origin[1], -np.pi) - c2
    return (y1 / a) ** 2 + (y2 / b) ** 2 < 1.0


def _sample(state: CorrectorState, point: Sequence[float]) -> float:
    grid = state.w
    coordinates = np.array([[point[0] / grid.h1], [point[1] / grid.h2]])
    return float(ndimage.map_coordinates(grid.values, coordinates, order=1, mode="grid-wrap")[0])


def containment_check(
    flow: CellularFlow,
    d: float,
    delta: float,
    n: int,
    times: Optional[Sequence[float]] = None,
    thetas: Optional[Sequence[float]] = None,
    origin: Sequence[float] = SQUARE_ORIGIN,
    n_phi: int = 720,
) -> ContainmentReport:
    """Evolve the burnt square and compare {G < 0} with the analytic ellipses.

    Args:
        flow: Cellular flow.
        d: Markstein number.
        delta: Corner margin; thetas default to (delta, 1/2, 1 - delta).
        n: Nodes per axis.
        times: Checkpoint times in [0, t_max]; default 0, t/4, t/2, t.
        thetas: Vertical centers of the ellipses, in [delta, 1 - delta].
        origin: Lower-left corner of S; its left edge must lie on x1 = 0 or pi.

    Returns:
        Per-time rows (analytic margin, violations, nodes checked), G on the
        edge of S at the last time, and every offending node.

    The semi-axis a(t) never exceeds 2 a0 <= delta / 8 and nodes are tested only
    inside the ellipse shrunk by 2h, so nodes_checked stays 0 unless n > 32 pi / delta.
    The rows then carry the analytic margin and the edge samples carry the
    solver side of the check.
    """
    params = derive_supersolution_params(delta, flow)
    t_max = params.t_max
    times = sorted([0.0, t_max / 4.0, t_max / 2.0, t_max] if times is None else [float(t) for t in times])
    if times[0] < 0 or times[-1] > t_max * (1.0 + 1e-12):
        raise ValueError(f"checkpoint times must lie in [0, {t_max:.6g}]")
    thetas = [delta, 0.5, 1.0 - delta] if thetas is None else [float(theta) for theta in thetas]
    if any(not delta - 1e-12 <= theta <= 1.0 - delta + 1e-12 for theta in thetas):
        raise ValueError(f"thetas must lie in [{delta}, {1 - delta}]")

    state = CorrectorState(levelset_pde.rectangle_arctan_data(n, origin), (0.0, 0.0), d, flow)
    shrink = 2.0 * state.w.h
    phis = _phi_grid(n_phi)
    report = ContainmentReport()

    for t in times:
        if t > state.t:
            state, _ = levelset_pde.evolve(state, t - state.t)
        margin = min(float(margin_at(params.ellipse(theta), flow, t, phis, origin).min()) for theta in thetas)
        violations = 0
        checked = 0
        for theta in thetas:
            inside = _inside_ellipse(state, params.ellipse(theta), t, shrink, origin)
            bad = inside & (state.w.values >= 0)
            checked += int(inside.sum())
            violations += int(bad.sum())
            report.offending_nodes.extend((t, int(i), int(j)) for i, j in zip(*np.nonzero(bad)))
        report.rows.append(ContainmentRow(t, margin, violations, checked))

    for theta in thetas:
        report.boundary_values[theta] = _sample(state, (origin[0], origin[1] + theta))

    logger.info(
        f"Containment delta={delta} A={flow.amplitude} d={d}: t_max={t_max:.3e}, "
        f"{sum(row.violations for row in report.rows)} violations, "
        f"edge {'burnt' if report.boundary_burnt else 'not burnt'}"
    )
    return report
