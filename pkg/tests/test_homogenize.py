import math

import numpy as np
import pytest

from models.hbar_estimate import HbarEstimate, Method, Resolution
from services.homogenize import (
    continuity_probe,
    control_refinement,
    eps_sensitivity,
    estimate,
    fit_growth_law,
    hbar_discounted,
    hbar_front_speed,
    hbar_game,
    relative_disagreement,
    sweep,
    transition_lower_bound,
)

SMALL = Resolution(
    grid=16,
    T=1.0,
    burn_in=0.5,
    checkpoint_every=0.5,
    lambdas=(0.4, 0.2),
    tol=1e-8,
    tau=0.1,
    game_T=0.3,
    game_grid=16,
    n_angles=16,
)


def _estimate(A: float, value: float, p=(1.0, 0.0)) -> HbarEstimate:
    return HbarEstimate(p, A, 0.0, Method.FRONT_SPEED, value)


def test_laminar_front_speed_is_norm_of_p():
    result = hbar_front_speed((3.0, 4.0), 0.0, 0.0, grid=16, T=2.0, burn_in=0.5, checkpoint_every=0.5)

    assert result.method is Method.FRONT_SPEED
    assert result.value == pytest.approx(5.0, rel=1e-12)
    assert result.error_indicator == pytest.approx(0.0, abs=1e-12)
    assert result.extras["checkpoints"] == 4
    assert result.discretization["burn_in"] == 0.5


def test_front_speed_needs_horizon_past_burn_in():
    with pytest.raises(ValueError):
        hbar_front_speed((1.0, 0.0), 0.0, 0.0, grid=16, T=1.0, burn_in=1.0)


def test_laminar_discounted():
    result = hbar_discounted((1.0, 0.0), 0.0, 0.0, lambdas=(0.4, 0.2), grid=16, tol=1e-8)

    assert result.value == pytest.approx(1.0, abs=1e-6)
    assert result.extras["per_lambda"] == pytest.approx([1.0, 1.0], abs=1e-6)
    assert result.discretization["lambdas"] == "0.4 0.2"
    # The rescaled first solution is already the fixed point of the second.
    assert result.extras["iterations"][1] == 1


def test_discounted_rejects_bad_lambdas():
    with pytest.raises(ValueError, match="strictly decreasing"):
        hbar_discounted((1.0, 0.0), 0.0, 0.0, lambdas=(0.1, 0.2), grid=16)
    with pytest.raises(ValueError, match="positive"):
        hbar_discounted((1.0, 0.0), 0.0, 0.0, lambdas=(0.2, -0.1), grid=16)


def test_laminar_game():
    result = hbar_game((1.0, 0.0), 0.0, 0.1, tau=0.1, T=0.5, grid=16, n_angles=16)

    assert result.value == pytest.approx(1.0, rel=1e-9)
    assert result.discretization["n_steps"] == 50
    assert result.error_indicator == pytest.approx(0.0, abs=1e-9)


def test_estimate_dispatches_by_method():
    for method in Method:
        assert estimate(method, (1.0, 0.0), 0.0, 0.1, SMALL).method is method
    assert estimate("discounted", (1.0, 0.0), 0.0, 0.0, SMALL).value == pytest.approx(1.0, abs=1e-6)


def test_front_speed_symmetries():
    def speed(p):
        return hbar_front_speed(p, 1.0, 0.1, grid=32, T=2.0, burn_in=0.5).value

    reference = speed((1.0, 0.5))
    assert reference > 0
    assert speed((0.5, 1.0)) == pytest.approx(reference, rel=1e-6)
    assert speed((-1.0, -0.5)) == pytest.approx(reference, rel=1e-6)


def test_flow_speeds_up_the_front():
    laminar = hbar_front_speed((1.0, 0.0), 0.0, 0.0, grid=32, T=3.0, burn_in=1.0).value
    stirred = hbar_front_speed((1.0, 0.0), 2.0, 0.0, grid=32, T=3.0, burn_in=1.0).value
    assert stirred > laminar


def test_sweep_orders_rows_by_amplitude_then_method():
    results = sweep((1.0, 0.0), 0.0, [0.0, 1.0], methods=(Method.FRONT_SPEED, Method.GAME), resolution=SMALL, workers=2)

    assert [(r.A, r.method) for r in results] == [
        (0.0, Method.FRONT_SPEED),
        (0.0, Method.GAME),
        (1.0, Method.FRONT_SPEED),
        (1.0, Method.GAME),
    ]
    assert results[0].value == pytest.approx(1.0, rel=1e-9)
    assert results[1].value == pytest.approx(1.0, rel=1e-9)


def test_sweep_rejects_unsorted_amplitudes():
    with pytest.raises(ValueError):
        sweep((1.0, 0.0), 0.0, [2.0, 1.0], resolution=SMALL)


def test_growth_law_recovers_constant():
    amplitudes = [2.0, 4.0, 8.0, 16.0]
    estimates = [_estimate(A, A * math.pi / (2 * math.log(A) + 1.5)) for A in amplitudes]
    estimates.append(_estimate(1.0, 1.0))
    estimates.append(_estimate(32.0, -1.0))

    fit = fit_growth_law(estimates)

    assert fit.c_lower == pytest.approx(1.5)
    assert fit.c_upper == pytest.approx(1.5)
    assert len(fit.implied) == 4
    assert fit.residual == pytest.approx(0.0, abs=1e-9)


def test_growth_law_needs_two_amplitudes():
    with pytest.raises(ValueError):
        fit_growth_law([_estimate(2.0, 3.0), _estimate(1.0, 1.0)])


def test_continuity_probe_on_laminar_flow():
    p_list = [(1.0, 0.0), (0.8, 0.6), (0.6, 0.8), (0.0, 1.0)]
    report = continuity_probe(p_list, 0.0, 0.0, Method.FRONT_SPEED, SMALL, workers=2)

    assert report.values == pytest.approx([1.0] * 4, rel=1e-9)
    assert report.max_gap == pytest.approx(0.0, abs=1e-9)
    assert report.jumps == []


def test_continuity_probe_single_point():
    report = continuity_probe([(1.0, 0.0)], 0.0, 0.0, Method.FRONT_SPEED, SMALL, workers=1)
    assert report.gaps == []


def test_transition_lower_bound():
    assert transition_lower_bound(1.0) == pytest.approx(math.pi / 2)
    with pytest.raises(ValueError):
        transition_lower_bound(0.0)


def test_relative_disagreement():
    estimates = [_estimate(1.0, value) for value in (1.0, 1.1, 0.9)]
    assert relative_disagreement(estimates) == pytest.approx(0.2 / 1.1)
    assert relative_disagreement(estimates[:1]) == 0.0


def test_eps_sensitivity_on_flat_front():
    values = eps_sensitivity((1.0, 0.0), 0.0, 0.1, grid=16, T=1.0, burn_in=0.5)

    assert sorted(values) == [0.5, 1.0, 2.0]
    assert all(value == pytest.approx(1.0, rel=1e-9) for value in values.values())


def test_control_refinement_rows():
    rows = control_refinement((1.0, 0.0), 0.0, 0.1, tau=0.1, T=0.3, grid=16)

    assert [(row["n_angles"], row["n_radii"]) for row in rows] == [(16, 2), (32, 3), (64, 5)]
    assert math.isnan(rows[0]["change"])
    assert all(row["hbar"] == pytest.approx(1.0, rel=1e-9) for row in rows)
    assert all(row["change"] == pytest.approx(0.0, abs=1e-9) for row in rows[1:])


def test_three_methods_agree_in_a_weak_cellular_flow():
    p, A, d = (1.0, 0.0), 0.5, 0.1
    front = hbar_front_speed(p, A, d, grid=32, T=12.0, burn_in=4.0).value
    discounted = hbar_discounted(p, A, d, lambdas=(0.1, 0.05, 0.025), grid=32, tol=1e-5).value
    played = hbar_game(p, A, d, tau=0.2, T=3.0, grid=32, n_angles=128, burn_in=1.0)

    assert front > 0
    assert discounted == pytest.approx(front, rel=0.05)
    assert played.value == pytest.approx(front, rel=0.10)
    assert played.discretization["burn_in"] == pytest.approx(1.0)
    assert played.extras["value_grid"].k == 75


def test_game_burn_in_is_exact_for_laminar_flow():
    result = hbar_game((1.0, 0.0), 0.0, 0.2, tau=0.1, T=0.5, grid=16, n_angles=16, burn_in=0.2)

    assert result.value == pytest.approx(1.0, rel=1e-9)
    assert result.discretization["n_steps"] == 50
    assert result.discretization["burn_in"] == pytest.approx(0.2)


def test_game_rejects_burn_in_past_horizon():
    with pytest.raises(ValueError):
        hbar_game((1.0, 0.0), 0.0, 0.1, tau=0.1, T=0.5, grid=16, n_angles=16, burn_in=0.5)


DIRECTIONS = [(math.cos(k * math.pi / 4), math.sin(k * math.pi / 4)) for k in range(8)]


@pytest.mark.parametrize("direction", DIRECTIONS)
def test_front_speed_is_positive_and_homogeneous(direction):
    single = hbar_front_speed(direction, 2.0, 0.1, grid=32, T=8.0, burn_in=2.0).value
    double = hbar_front_speed((2 * direction[0], 2 * direction[1]), 2.0, 0.1, grid=32, T=8.0, burn_in=2.0).value

    assert single > 0
    assert double == pytest.approx(2.0 * single, rel=0.05)


@pytest.mark.parametrize("direction", DIRECTIONS)
def test_discounted_is_positive_and_homogeneous(direction):
    single = hbar_discounted(direction, 2.0, 0.1, lambdas=(0.2, 0.1), grid=32, tol=1e-4).value
    double = hbar_discounted((2 * direction[0], 2 * direction[1]), 2.0, 0.1, lambdas=(0.2, 0.1), grid=32, tol=1e-4).value

    assert single > 0
    assert double == pytest.approx(2.0 * single, rel=0.05)


def test_corrector_oscillation_settles():
    result = hbar_front_speed((1.0, 0.0), 2.0, 0.1, grid=32, T=16.0, burn_in=4.0)

    assert result.extras["osc_final"] <= 1.2 * result.extras["osc_half"] + 1e-3
    assert math.isfinite(result.extras["corrector_bound"])


@pytest.mark.parametrize("A", [1.0, 2.0])
def test_scaled_discounted_solution_stays_within_constant_barriers(A):
    result = hbar_discounted((1.0, 0.0), A, 0.1, lambdas=(0.2, 0.1), grid=32, tol=1e-4)

    assert result.extras["max_abs_scaled"] <= 1.0 + A + 1e-3
    assert all(value > 0 for value in result.extras["per_lambda"])
