import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from marsupial.errors import InvalidParams
from marsupial.vehicles import UGV, ControllerGains, VehicleState, uav_command_accel, uav_step, ugv_step

G = ControllerGains()
coord = st.floats(-100, 100)
vec = st.tuples(coord, coord, coord)


def test_default_gains():
    assert (G.kp, G.kd, G.max_speed, G.max_accel, G.uav_mass) == (4.0, 4.0, 1.0, 4.0, 1.5)


@pytest.mark.parametrize("name", ["kp", "kd", "max_speed", "max_accel", "uav_mass"])
def test_gains_must_be_positive(name):
    with pytest.raises(InvalidParams):
        ControllerGains(**{name: 0.0})


def test_uav_equilibrium():
    v = VehicleState.at([1.0, 2.0, 3.0])
    w = uav_step(v, G, np.zeros(3), 1e-3)
    np.testing.assert_array_equal(w.position, v.position)
    np.testing.assert_array_equal(w.velocity, 0.0)


def test_uav_pd_accel():
    v = VehicleState.at([0.0, 0, 2]).with_goal([1.0, 0, 2])
    np.testing.assert_allclose(uav_command_accel(v, G), [4, 0, 0])
    w = uav_step(v, G, np.zeros(3), 1e-3)
    np.testing.assert_allclose(w.velocity, [0.004, 0, 0])
    np.testing.assert_allclose(w.position, [4e-6, 0, 2])


def test_uav_steady_offset_under_tension():
    v = VehicleState.at([0.0, 0, 2])
    tension = np.array([0, 0, -0.0981])
    for _ in range(20000):
        v = uav_step(v, G, tension, 1e-3)
    offset = 2.0 - v.position[2]
    assert offset == pytest.approx(0.0981 / (1.5 * 4.0), rel=1e-6)
    assert offset == pytest.approx(0.01635, abs=1e-5)


def test_uav_rejects_bad_dt():
    with pytest.raises(ValueError):
        uav_step(VehicleState.at([0, 0, 1.0]), G, np.zeros(3), 0.0)


def test_ugv_at_goal():
    v = VehicleState.at([1.0, 1, 0], kind=UGV)
    w = ugv_step(v, G, 1e-3)
    np.testing.assert_array_equal(w.velocity, 0.0)


def test_ugv_saturated_advance():
    v = VehicleState.at([0.0, 0, 0.1], kind=UGV).with_goal([10.0, 0, 5])
    w = ugv_step(v, G, 1.0)
    np.testing.assert_allclose(w.position, [1.0, 0, 0.1])


def test_ugv_diagonal_direction():
    v = VehicleState.at([0.0, 0, 0], kind=UGV).with_goal([3.0, 4, 0])
    w = ugv_step(v, G, 1e-3)
    np.testing.assert_allclose(w.velocity / np.linalg.norm(w.velocity), [0.6, 0.8, 0])


def test_ugv_keeps_height():
    v = VehicleState.at([0.0, 0, 0.25], kind=UGV)
    assert v.with_goal([1.0, 1, 7]).goal[2] == 0.25


@given(vec, vec, st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)))
def test_speed_clamp(start, goal, tension):
    v = VehicleState.at(start).with_goal(goal)
    g = VehicleState.at(start, kind=UGV).with_goal(goal)
    for _ in range(50):
        v = uav_step(v, G, np.array(tension), 1e-2)
        g = ugv_step(g, G, 1e-2)
        assert np.linalg.norm(v.velocity) <= G.max_speed + 1e-12
        assert np.linalg.norm(g.velocity) <= G.max_speed + 1e-12


@given(st.tuples(st.floats(-28, 28), st.floats(-28, 28), st.floats(-28, 28)))
def test_uav_convergence(goal):
    # goals within 50 m: 100 m cannot be flown at 1 m/s in 60 s
    v = VehicleState.at([0.0, 0, 0]).with_goal(goal)
    dt = 1e-2
    for _ in range(6000):
        v = uav_step(v, G, np.zeros(3), dt)
    assert np.linalg.norm(v.position - v.goal) < 0.05


@given(st.tuples(st.floats(-0.57, 0.57), st.floats(-0.57, 0.57), st.floats(-0.57, 0.57)))
def test_disturbance_bounded(tension):
    f = np.array(tension)
    v = VehicleState.at([0.0, 0, 1])
    for _ in range(2000):
        v = uav_step(v, G, f, 1e-2)
    bound = np.linalg.norm(f) / (G.uav_mass * G.kp)
    assert np.linalg.norm(v.position - v.goal) <= bound + 1e-6
