import numpy as np
import pytest

from models.flow import CELL_CENTER, CellularFlow
from models.game import GameParams
from services.flowfield import stream, stream_gradient, velocity
from services.game import perp
from services.strategies import (
    AxisPush,
    Composite,
    Descent,
    Exit,
    Fixed,
    FollowFlow,
    MaxSign,
    MinSign,
    OpposeAxis,
    OpposeDisplacement,
    cell_distance,
    cell_transition_strategy,
)


def _params(amplitude=1.0, d=0.2, tau=0.05) -> GameParams:
    return GameParams(tau=tau, d=d, n_steps=10, flow=CellularFlow(amplitude))


def test_exit_is_perpendicular_to_displacement():
    strategy = Exit()
    strategy.reset(np.array([1.0, 1.0]))

    np.testing.assert_allclose(strategy.choose(np.array([1.0, 1.0])), [1.0, 0.0])
    eta = strategy.choose(np.array([1.3, 1.4]))
    assert np.hypot(*eta) == pytest.approx(1.0)
    assert np.dot(eta, [0.3, 0.4]) == pytest.approx(0.0, abs=1e-12)


def test_axis_push_moves_along_direction():
    strategy = AxisPush((0.0, -2.0))
    eta = strategy.choose(np.zeros(2))
    np.testing.assert_allclose(perp(eta), [0.0, -1.0])


def test_descent_lowers_the_level():
    flow = CellularFlow(1.0)
    x = np.array([1.8, 1.3])
    eta = Descent(flow).choose(x)

    np.testing.assert_allclose(eta, velocity(flow, x) / np.hypot(*velocity(flow, x)))
    gradient = stream_gradient(x)
    np.testing.assert_allclose(perp(eta), -gradient / np.hypot(*gradient))

    below = np.array([1.8, -1.3])
    assert np.dot(perp(Descent(flow).choose(below)), stream_gradient(below)) > 0


def test_descent_falls_back_to_exit_at_stagnation_points():
    strategy = Descent(CellularFlow(1.0))
    strategy.reset(np.array(CELL_CENTER))

    np.testing.assert_allclose(strategy.choose(np.array(CELL_CENTER)), [1.0, 0.0])
    assert len(strategy.events) == 1
    assert strategy.events[0].startswith("exit_fallback@")

    strategy.reset(np.array(CELL_CENTER))
    assert strategy.events == []


def test_composite_switches_phases():
    strategy = Composite(
        [
            (FollowFlow(), lambda x: x[0] > 1.0),
            (AxisPush((1.0, 0.0)), None),
        ]
    )
    assert strategy.name == "composite(follow_flow>axis_push)"

    strategy.reset(np.zeros(2))
    np.testing.assert_allclose(strategy.choose(np.array([0.5, 0.0])), [0.0, 0.0])
    np.testing.assert_allclose(strategy.choose(np.array([1.5, 0.0])), [0.0, -1.0])
    # Once advanced, a phase is not revisited.
    np.testing.assert_allclose(strategy.choose(np.array([0.5, 0.0])), [0.0, -1.0])
    assert strategy.events == ["phase 1 (axis_push)"]

    with pytest.raises(ValueError):
        Composite([])


def test_sign_strategies():
    params = _params()
    x = np.array([1.8, 1.3])
    eta = np.array([1.0, 0.0])

    b = MaxSign().choose(x, eta, params)
    other = MinSign().choose(x, eta, params)
    assert b == -other
    assert stream(x + b * eta * 0.1) > stream(x - b * eta * 0.1)

    assert Fixed(-1).choose(x, eta, params) == -1
    with pytest.raises(ValueError):
        Fixed(0)

    assert OpposeAxis((1.0, 0.0)).choose(x, eta, params) == -1
    assert OpposeAxis((1.0, 0.0)).choose(x, -eta, params) == 1
    assert OpposeAxis((1.0, 0.0)).choose(x, np.array([0.0, 1.0]), params) == 1

    opposer = OpposeDisplacement()
    opposer.reset(np.zeros(2))
    assert opposer.choose(np.array([0.5, 0.0]), eta, params) == -1


def test_cell_distance():
    assert cell_distance((1.0, 1.0), 1) == 0.0
    assert cell_distance((1.0, 1.0), 2) == pytest.approx(1.0)
    assert cell_distance((-0.5, 1.0), 2) == 0.0
    assert cell_distance((1.0, 1.0), 4) == pytest.approx(np.sqrt(2.0))
    assert cell_distance((1.0 + 2 * np.pi, 1.0), 2) == pytest.approx(1.0)


def test_cell_transition_phases():
    strategy = cell_transition_strategy(CellularFlow(1.0), [1, 2, 4])
    assert len(strategy.phases) == 6
    assert strategy.phases[-1][1] is None
    assert strategy.phases[2][1] is not None

    with pytest.raises(ValueError):
        cell_transition_strategy(CellularFlow(1.0), [1])
    with pytest.raises(ValueError):
        cell_transition_strategy(CellularFlow(1.0), [1, 4])
