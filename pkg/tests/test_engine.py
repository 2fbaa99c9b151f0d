import numpy as np
import pytest

from marsupial.engine import (
    SimParams,
    contact_forces,
    copy_world,
    make_world,
    node_radii,
    run_world,
    step_world,
    tether_feedforward,
)
from marsupial.errors import InvalidParams, NumericalDivergence, Timeout
from marsupial.spatial import Box
from marsupial.tether import TetherParams, TetherState
from marsupial.tracking import RTTA, TrackerState, Waypoint
from marsupial.vehicles import ControllerGains

E = TetherParams(element_length=0.1)


def moving_world(comp=1.0):
    wps = [Waypoint(np.array([0.5, 0, 0]), np.array([1.5, 0.3, 1.8])),
           Waypoint(np.array([0.0, 0, 0]), np.array([0.8, 0, 1.2]))]
    return make_world([1.0, 0, 1.5], [0, 0, 0], tether_params=E,
                      uav_gains=ControllerGains(tether_compensation=comp),
                      tracker=TrackerState(wps, mode=RTTA, slack_factor=1.1), slack_factor=1.1)


def state_vector(w):
    return np.concatenate([w.tether.positions.ravel(), w.tether.velocities.ravel(), w.uav.position,
                           w.uav.velocity, w.ugv.position, w.ugv.velocity, w.uav_tether_force,
                           [w.winch.deployed_length, w.time]])


@pytest.mark.parametrize("kwargs", [{"dt": 0.0}, {"dt": 0.02}, {"gravity": 0.0},
                                    {"contact_stiffness": -1.0}, {"projection_iterations": 0}])
def test_sim_params_validation(kwargs):
    with pytest.raises(InvalidParams):
        SimParams(**kwargs)


def test_time_advances_by_dt():
    w = moving_world()
    for k in range(1, 11):
        step_world(w)
        assert w.time == k * w.params.dt and w.step_count == k


def test_free_fall_probe():
    w = make_world([1.0, 0, 20.0], [0, 0, 0], deployed_length=0.0)
    w.tether = TetherState(np.array([[5.0, 0, 10.0]]), np.zeros((1, 3)), np.zeros(0), np.array([0.01]), False, False)
    for _ in range(1000):
        step_world(w)
    drop = 10.0 - w.tether.positions[0, 2]
    assert abs(drop - 4.905) / 4.905 < 5e-3


def test_determinism_bitwise():
    a, b = moving_world(), moving_world()
    for _ in range(1500):
        step_world(a)
        step_world(b)
        assert np.array_equal(state_vector(a), state_vector(b))


def test_anchor_consistency_and_tension_coupling():
    w = moving_world()
    prev_tip = None
    for _ in range(2000):
        step_world(w)
        assert np.linalg.norm(w.tether.positions[-1] - w.uav_attachment) < 1e-9
        assert np.linalg.norm(w.tether.positions[0] - w.winch_exit) < 1e-9
        if prev_tip is not None:
            assert np.max(np.abs(w.uav_tether_impulse + prev_tip)) < 1e-12
        prev_tip = w.tip_anchor_impulse.copy()


def test_static_fixpoint():
    w = make_world([1.0, 0, 1.0], [0, 0, 0], deployed_length=1.2 * np.sqrt(2),
                   tether_params=TetherParams(element_length=0.2),
                   uav_gains=ControllerGains(tether_compensation=1.0))
    for _ in range(20000):
        step_world(w)
    a = copy_world(w)
    step_world(w)
    assert np.max(np.abs(state_vector(w)[:-1] - state_vector(a)[:-1])) < 1e-9


def test_tension_points_along_tether():
    w = make_world([1.0, 0, 1.0], [0, 0, 0], deployed_length=1.2 * np.sqrt(2),
                   tether_params=TetherParams(element_length=0.2))
    for _ in range(3000):
        step_world(w)
    f = w.uav_tether_force
    assert f[2] < 0 and f[0] < 0
    assert np.linalg.norm(f) < 2 * w.tether.total_mass * 9.81


def test_feedforward_none_when_taut():
    w = make_world([1.0, 0, 1.0], [0, 0, 0], deployed_length=1.0,
                   uav_gains=ControllerGains(tether_compensation=1.0))
    assert tether_feedforward(w) is None
    w = make_world([1.0, 0, 1.0], [0, 0, 0], deployed_length=2.0,
                   uav_gains=ControllerGains(tether_compensation=1.0))
    ff = tether_feedforward(w)
    assert ff[2] > 0


def test_contact_pushes_out_and_damps():
    box = Box(min_corner=(-1, -1, -1), max_corner=(1, 1, 0))
    pos = np.array([[0, 0, -0.001], [0, 0, 0.5]])
    vel = np.array([[0.2, 0, -0.1], [0, 0, 0]])
    f, deepest = contact_forces(pos, vel, np.full(2, 0.01), np.full(2, 0.004), [box], SimParams())
    assert deepest == pytest.approx(0.005)
    assert f[0, 2] > 0 and f[0, 0] < 0
    np.testing.assert_array_equal(f[1], 0.0)
    assert abs(f[0, 0]) <= 0.5 * f[0, 2] + 1e-12


def test_node_radii():
    r = node_radii(6, TetherParams())
    assert list(r) == [0.004, 0.009, 0.004, 0.004, 0.009, 0.004]


def test_divergence_guard():
    w = moving_world()
    w.tether.velocities[3] = [1e9, 0, 0]
    with pytest.raises(NumericalDivergence):
        step_world(w)
    w = moving_world()
    w.tether.positions[3] = np.nan
    with pytest.raises(NumericalDivergence):
        step_world(w)


def test_empty_trajectory_initial_sample_only():
    w = make_world([1.0, 0, 1.5], [0, 0, 0], tracker=TrackerState([]))
    log = run_world(w, timeout=5.0)
    assert len(log) == 1 and log.samples[0].t == 0.0


def test_run_completes_on_sample_boundary():
    w = moving_world()
    log = run_world(w, timeout=30.0, log_rate=50.0)
    assert w.tracker.complete and len(log.arrival_times) == 2
    assert w.step_count % 20 == 0
    assert np.all(np.diff(log.series("t")) > 0)


def test_timeout_carries_partial_log():
    wps = [Waypoint(np.array([0.0, 0, 0]), np.array([50.0, 0, 1.5]))]
    w = make_world([1.0, 0, 1.5], [0, 0, 0], tracker=TrackerState(wps))
    with pytest.raises(Timeout) as info:
        run_world(w, timeout=0.25, log_rate=10.0)
    log = info.value.log
    assert log is not None and len(log) >= 3
    assert log.samples[-1].t == pytest.approx(0.25)
