import numpy as np
import pytest

from models.errors import GflameError
from models.flow import CellularFlow
from models.game import GameParams, ValueGrid
from models.grid import Grid2
from services.game import (
    consistency_residual,
    control_set,
    dp_backward,
    game_steps,
    operator_envelopes,
    operator_value,
    speed_from_value,
    step_position,
)


def _params(tau=0.1, d=0.0, n_steps=1, amplitude=0.0, **kwargs) -> GameParams:
    return GameParams(tau=tau, d=d, n_steps=n_steps, flow=CellularFlow(amplitude), **kwargs)


def test_laminar_step():
    moved = step_position((0.0, 0.0), (1.0, 0.0), 1, _params(d=0.5))
    np.testing.assert_allclose(moved, [0.1, 0.01])


def test_step_rejects_bad_controls():
    with pytest.raises(ValueError):
        step_position((0.0, 0.0), (1.0, 0.5), 1, _params())
    with pytest.raises(ValueError):
        step_position((0.0, 0.0), (0.5, 0.0), 0, _params())


def test_game_params_validation():
    with pytest.raises(ValueError):
        _params(tau=0.0)
    with pytest.raises(ValueError):
        _params(d=-0.1)
    with pytest.raises(ValueError):
        _params(n_angles=4)
    with pytest.raises(ValueError):
        _params(interpolation_order=2)


def test_control_set_size():
    params = _params(n_angles=8, n_radii=3)
    assert control_set(params, (1.0, 0.0)).shape == (21, 2)
    assert control_set(params).shape == (17, 2)
    assert control_set(_params(n_angles=8, n_radii=3, align_controls=False), (1.0, 0.0)).shape == (17, 2)
    assert np.all(np.linalg.norm(control_set(params, (1.0, 2.0)), axis=1) <= 1.0 + 1e-12)


def test_operator_value_and_envelopes():
    hessian = np.diag([1.0, -3.0])
    assert operator_value(hessian, (1.0, 0.0), 0.2) == pytest.approx(1.6)
    assert operator_value(np.diag([0.0, 10.0]), (1.0, 0.0), 0.2) == 0.0
    assert operator_envelopes(hessian, (0.0, 0.0), 0.2) == pytest.approx((0.0, 2.4))
    assert operator_envelopes(hessian, (1.0, 0.0), 0.2) == pytest.approx((1.6, 1.6))
    with pytest.raises(ValueError):
        operator_value(hessian, (0.0, 0.0), 0.2)


def test_one_step_increment_matches_operator():
    rng = np.random.default_rng(11)
    params = _params(tau=0.01, d=0.1, amplitude=1.0, n_angles=256)
    for _ in range(50):
        angle = rng.uniform(0, 2 * np.pi)
        gradient = rng.uniform(0.5, 1.5) * np.array([np.cos(angle), np.sin(angle)])
        entries = rng.uniform(-1.0, 1.0, size=3)
        hessian = np.array([[entries[0], entries[1]], [entries[1], entries[2]]])
        x = rng.uniform(0, 2 * np.pi, size=2)

        report = consistency_residual(gradient, hessian, x, params)
        assert report.inside, report


def test_laminar_value_drops_by_tau_squared_per_step():
    params = _params(tau=0.1, d=0.3, n_steps=1)
    value = dp_backward((1.0, 0.0), params, 16)
    np.testing.assert_allclose(value.base.values, -params.tau**2, rtol=1e-9)

    params = _params(tau=0.1, n_steps=5)
    value = dp_backward((1.0, 0.0), params, 16)
    assert value.k == 5
    assert speed_from_value(value, params) == pytest.approx(1.0, rel=1e-9)


def test_value_is_positively_homogeneous_in_slope():
    params = _params(tau=0.1, d=0.1, n_steps=4, amplitude=1.0, n_angles=16)
    single = dp_backward((1.0, 0.5), params, 16).base.values
    double = dp_backward((2.0, 1.0), params, 16).base.values
    np.testing.assert_allclose(double, 2.0 * single, rtol=1e-10, atol=1e-12)


def test_maximum_of_periodic_part_never_increases():
    maxima = [
        dp_backward((1.0, 0.0), _params(tau=0.1, d=0.2, n_steps=k, amplitude=0.5, n_angles=16, interpolation_order=1), 16).base.values.max()
        for k in range(1, 5)
    ]
    assert all(later <= earlier for earlier, later in zip(maxima, maxima[1:]))


def test_value_at_nodes_adds_affine_part():
    base = Grid2.zeros(16)
    value = ValueGrid(base, (1.0, 0.0), 0)
    x1, _ = base.coordinates()
    np.testing.assert_allclose(value.value_at_nodes(), x1)


def test_speed_needs_a_step():
    params = _params(n_steps=0)
    value = dp_backward((1.0, 0.0), params, 16)
    assert value.k == 0
    with pytest.raises(GflameError):
        speed_from_value(value, params)


def test_game_steps():
    assert game_steps(1.0, 0.1) == 100
    assert game_steps(1.0, 0.1, cap=50) == 50
    assert game_steps(2.0, 0.02) == 5000


def test_dp_continues_from_an_initial_grid():
    params = _params(tau=0.1, d=0.1, n_steps=2, amplitude=1.0, n_angles=16)
    half = _params(tau=0.1, d=0.1, n_steps=1, amplitude=1.0, n_angles=16)
    direct = dp_backward((1.0, 0.5), params, 16).base.values
    first = dp_backward((1.0, 0.5), half, 16)
    resumed = dp_backward((1.0, 0.5), half, 16, initial=first.base).base.values

    np.testing.assert_allclose(resumed, direct, rtol=1e-12, atol=1e-14)
    with pytest.raises(ValueError):
        dp_backward((1.0, 0.5), half, 16, initial=Grid2.zeros(8))
