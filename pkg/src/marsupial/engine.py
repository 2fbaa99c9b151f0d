"""World assembly and the fixed-timestep loop.

Every call to :func:`step_world` runs the same sub-steps in the same order:

1. controllers: the tracker picks goals and a tether length target
2. winch: the deployed length moves towards the target, spawning or absorbing nodes
3. tether forces: springs, axial damping and gravity
4. contacts: penalty spring-damper with regularised Coulomb friction
5. integration: semi-implicit Euler for the free nodes and both vehicles
6. anchors: root snapped to the winch exit, tip to the UAV
7. projection: segment lengths restored (inextensible mode)
8. tension: the anchor impulse on the tip is measured; its reaction acts on the UAV

The UAV integrates before the tip impulse of the current step is known, so
the tether force it feels is the reaction measured on the previous step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .catenary import solve_catenary
from .errors import InvalidParams, NumericalDivergence, Timeout
from .metrics import MetricsLog, Sample
from .spatial import Obstacle, Vec3, min_distance
from .tether import (
    TetherParams,
    TetherState,
    accumulate_forces,
    anchor_impulse,
    build_tether,
    project_inextensible,
)
from .tracking import TrackerState, advance
from .vehicles import ControllerGains, VehicleState, UGV, uav_step, ugv_step
from .winch import WinchState, command_target, step_winch

DIVERGENCE_LIMIT = 1.0e6


@dataclass(frozen=True)
class SimParams:
    dt: float = 1.0e-3
    gravity: float = 9.81
    contact_stiffness: float = 1000.0
    contact_damping: float = 10.0
    friction_coeff: float = 0.5
    projection_iterations: int = 4

    def __post_init__(self):
        if not 0.0 < self.dt <= 0.01:
            raise InvalidParams(f"dt must be in (0, 0.01], got {self.dt}")
        if not self.gravity > 0:
            raise InvalidParams("gravity must be > 0")
        if self.contact_stiffness < 0 or self.contact_damping < 0 or self.friction_coeff < 0:
            raise InvalidParams("contact parameters must be >= 0")
        if int(self.projection_iterations) < 1:
            raise InvalidParams("projection_iterations must be >= 1")


@dataclass
class WorldState:
    time: float
    uav: VehicleState
    ugv: VehicleState
    winch: WinchState
    tether: TetherState
    obstacles: List[Obstacle] = field(default_factory=list)
    params: SimParams = field(default_factory=SimParams)
    tether_params: TetherParams = field(default_factory=TetherParams)
    uav_gains: ControllerGains = field(default_factory=ControllerGains)
    ugv_gains: ControllerGains = field(default_factory=ControllerGains)
    tracker: Optional[TrackerState] = None
    step_count: int = 0
    # Force the tether applies to the UAV during the next step (N).
    uav_tether_force: Vec3 = field(default_factory=lambda: np.zeros(3))
    # Impulses of the last step (N s): UAV on tether tip, tether on UAV.
    tip_anchor_impulse: Vec3 = field(default_factory=lambda: np.zeros(3))
    uav_tether_impulse: Vec3 = field(default_factory=lambda: np.zeros(3))
    last_penetration: float = 0.0

    @property
    def winch_exit(self) -> Vec3:
        return self.winch.exit_point(self.ugv.position)

    @property
    def uav_attachment(self) -> Vec3:
        return self.uav.position


def node_radii(n_nodes: int, params: TetherParams) -> np.ndarray:
    """Collision radius per node; the joints next to each anchor are thicker."""
    r = np.full(n_nodes, params.node_radius)
    if n_nodes > 2:
        r[1] = r[-2] = params.joint_radius
    return r


def contact_forces(
    positions: np.ndarray,
    velocities: np.ndarray,
    masses: np.ndarray,
    radii: np.ndarray,
    obstacles: Sequence[Obstacle],
    p: SimParams,
) -> Tuple[np.ndarray, float]:
    """Penalty contact force on every node and the deepest penetration (m).

    The normal force is ``k * depth - c * v_n``, clipped at zero so contacts
    only push. Friction opposes the tangential velocity and is capped at
    ``mu * F_n``; below that cap it is viscous, never stronger than what
    would stop the sliding within one step. The damping coefficient is
    capped the same way, so light nodes stay stable at the fixed step.
    """
    forces = np.zeros_like(positions)
    deepest = 0.0
    if not len(positions):
        return forces, deepest
    brake = masses / p.dt
    for o in obstacles:
        pen = radii - o.signed_distance(positions)
        hit = pen > 0.0
        if not np.any(hit):
            continue
        idx = np.nonzero(hit)[0]
        depth = pen[idx]
        deepest = max(deepest, float(np.max(depth)))
        n = np.atleast_2d(o.surface_normal(positions[idx]))
        n = n / np.linalg.norm(n, axis=1, keepdims=True)
        v = velocities[idx]
        vn = np.sum(v * n, axis=1)
        damping = np.minimum(p.contact_damping, brake[idx])
        fn = np.maximum(p.contact_stiffness * depth - damping * vn, 0.0)
        vt = v - vn[:, None] * n
        speed = np.linalg.norm(vt, axis=1)
        mu = o.friction_coeff
        coeff = np.minimum(mu * fn / np.maximum(speed, 1e-12), brake[idx])
        forces[idx] += fn[:, None] * n - coeff[:, None] * vt
    return forces, deepest


def tether_feedforward(w: WorldState) -> Optional[Vec3]:
    """Extra UAV thrust cancelling the modelled static tether load.

    Uses the analytic hanging curve between the winch exit and the UAV, scaled
    by ``tether_compensation`` and limited to ``uav_mass * max_accel``.
    """
    g = w.uav_gains
    if g.tether_compensation <= 0.0 or w.tether.n_segments == 0:
        return None
    exit_point, tip = w.winch_exit, w.uav_attachment
    if w.winch.deployed_length <= float(np.linalg.norm(tip - exit_point)):
        return None
    curve = solve_catenary(exit_point, tip, w.winch.deployed_length)
    loads = curve.anchor_forces(w.tether_params.weight_per_length * w.params.gravity)
    if loads is None:
        return None
    ff = -g.tether_compensation * loads[1]
    limit = g.uav_mass * g.max_accel
    n = float(np.linalg.norm(ff))
    return ff * (limit / n) if n > limit else ff


def _check_finite(w: WorldState) -> None:
    # max() propagates NaN, so a single comparison catches both failure modes.
    peak = max(
        float(np.max(np.abs(w.tether.positions))) if w.tether.n_nodes else 0.0,
        float(np.max(np.abs(w.tether.velocities))) if w.tether.n_nodes else 0.0,
        float(np.max(np.abs(w.uav.position))), float(np.max(np.abs(w.uav.velocity))),
        float(np.max(np.abs(w.ugv.position))),
    )
    if not peak <= DIVERGENCE_LIMIT:
        raise NumericalDivergence(
            f"state magnitude exceeded {DIVERGENCE_LIMIT:g} at t={w.time:.3f} s; "
            "check dt, stiffness and damping"
        )


def _place_anchors(w: WorldState) -> None:
    s = w.tether
    if s.n_nodes == 0:
        return
    if s.root_anchored:
        s.positions[0] = w.winch_exit
        s.velocities[0] = w.ugv.velocity
    if s.tip_anchored and s.n_nodes > 1:
        s.positions[-1] = w.uav_attachment
        s.velocities[-1] = w.uav.velocity


def step_world(w: WorldState) -> WorldState:
    """Advance the world by one ``dt``. The tether arrays are updated in place."""
    p = w.params
    dt = p.dt

    # 1. controllers
    if w.tracker is not None:
        _, (ugv_goal, uav_goal), target = advance(w.tracker, w)
        w.ugv = w.ugv.with_goal(ugv_goal)
        w.uav = w.uav.with_goal(uav_goal)
        if target is not None:
            w.winch = command_target(w.winch, target)
    feedforward = tether_feedforward(w)

    # 2. winch
    w.winch, w.tether = step_winch(
        w.winch, w.tether, dt, w.tether_params, w.ugv.position, w.ugv.velocity, w.uav_attachment
    )
    s = w.tether

    # 3-4. forces and contacts
    free = s.free_mask()
    contacts = np.zeros_like(s.positions)
    w.last_penetration = 0.0
    if w.obstacles and np.any(free):
        idx = np.nonzero(free)[0]
        f, w.last_penetration = contact_forces(
            s.positions[idx], s.velocities[idx], s.masses[idx],
            node_radii(s.n_nodes, w.tether_params)[idx], w.obstacles, p,
        )
        contacts[idx] = f
    forces = accumulate_forces(s, w.tether_params, p.gravity, contacts)

    # 5. integration
    inv_m = s.inverse_masses()
    s.velocities += dt * forces * inv_m[:, None]
    s.positions += dt * s.velocities * free[:, None]
    tip_velocity_before = s.velocities[-1].copy() if s.n_nodes > 1 else np.zeros(3)
    uav_force = w.uav_tether_force
    w.uav_tether_impulse = dt * uav_force
    w.uav = uav_step(w.uav, w.uav_gains, uav_force, dt, feedforward)
    w.ugv = ugv_step(w.ugv, w.ugv_gains, dt)

    # 6. anchors
    _place_anchors(w)

    # 7. projection
    impulse = np.zeros_like(s.positions)
    if w.tether_params.inextensible_mode and s.n_segments:
        before = s.positions.copy()
        impulse = project_inextensible(s, p.projection_iterations, w.tether_params.axial_compliance, dt)
        s.velocities += (s.positions - before) * (free[:, None] / dt)

    # 8. tension on the UAV
    if s.n_segments:
        w.tip_anchor_impulse = anchor_impulse(s, -1, tip_velocity_before, forces, impulse, dt)
        w.uav_tether_force = -w.tip_anchor_impulse / dt
    else:
        w.tip_anchor_impulse = np.zeros(3)
        w.uav_tether_force = np.zeros(3)

    w.step_count += 1
    w.time = w.step_count * dt
    _check_finite(w)
    return w


def copy_world(w: WorldState) -> WorldState:
    """Independent copy; the tracker's command queue is not shared but starts empty."""
    tracker = None
    if w.tracker is not None:
        tracker = TrackerState(list(w.tracker.waypoints), w.tracker.mode, w.tracker.slack_factor,
                               w.tracker.current_index, list(w.tracker.arrival_times))
    return replace(
        w, tether=w.tether.copy(), obstacles=list(w.obstacles), tracker=tracker,
        uav_tether_force=w.uav_tether_force.copy(),
        tip_anchor_impulse=w.tip_anchor_impulse.copy(),
        uav_tether_impulse=w.uav_tether_impulse.copy(),
    )


def make_world(
    uav_position: Vec3,
    ugv_position: Vec3,
    deployed_length: Optional[float] = None,
    tether_params: TetherParams = TetherParams(),
    params: SimParams = SimParams(),
    obstacles: Sequence[Obstacle] = (),
    uav_gains: ControllerGains = ControllerGains(),
    ugv_gains: ControllerGains = ControllerGains(),
    winch: Optional[WinchState] = None,
    tracker: Optional[TrackerState] = None,
    slack_factor: float = 1.05,
) -> WorldState:
    """Assemble a world with the tether laid on its hanging curve.

    When neither ``deployed_length`` nor ``winch`` is given the tether gets
    ``slack_factor`` times the exit-to-UAV distance.
    """
    uav = VehicleState.at(uav_position)
    ugv = VehicleState.at(ugv_position, kind=UGV)
    if winch is None:
        exit_point = np.asarray(ugv.position, dtype=float)
        if deployed_length is None:
            deployed_length = slack_factor * float(np.linalg.norm(uav.position - exit_point))
        winch = WinchState.create(deployed_length)
    elif deployed_length is not None:
        winch = replace(winch, deployed_length=float(deployed_length), target_length=float(deployed_length))
    tether = build_tether(tether_params, winch.exit_point(ugv.position), uav.position, winch.deployed_length)
    w = WorldState(
        time=0.0, uav=uav, ugv=ugv, winch=winch, tether=tether, obstacles=list(obstacles),
        params=params, tether_params=tether_params, uav_gains=uav_gains, ugv_gains=ugv_gains,
        tracker=tracker,
    )
    _place_anchors(w)
    return w


def sample_world(w: WorldState, include_tether: bool = True) -> Sample:
    nodes = w.tether.positions.copy() if include_tether else np.zeros((0, 3))
    points = np.vstack([w.uav.position[None, :], w.tether.positions])
    return Sample(
        t=w.time,
        uav_pos=w.uav.position.copy(),
        ugv_pos=w.ugv.position.copy(),
        uav_vel=w.uav.velocity.copy(),
        ugv_vel=w.ugv.velocity.copy(),
        uav_goal=w.uav.goal.copy(),
        deployed_length=w.winch.deployed_length,
        target_length=w.winch.target_length,
        tether_nodes=nodes,
        min_obstacle_dist=min_distance(points, w.obstacles),
        current_target_index=w.tracker.current_index if w.tracker is not None else 0,
    )


def steps_per_sample(dt: float, log_rate: float) -> int:
    if not log_rate > 0:
        raise InvalidParams("log rate must be > 0")
    return max(1, int(round(1.0 / (log_rate * dt))))


def run_world(w: WorldState, timeout: float, log_rate: float = 100.0) -> MetricsLog:
    """Step ``w`` until its tracker completes, sampling at ``log_rate`` Hz.

    After the last waypoint is reached stepping continues to the next sample
    boundary, so the final sample shows the completed state. Raises
    :class:`Timeout` (carrying the partial log) if ``timeout`` sim-seconds pass
    first.
    """
    if not timeout > 0:
        raise InvalidParams("timeout must be > 0")
    stride = steps_per_sample(w.params.dt, log_rate)
    total = len(w.tracker.waypoints) if w.tracker is not None else 0
    log = MetricsLog(total_targets=total)
    log.append(sample_world(w))
    max_steps = int(math.ceil(timeout / w.params.dt - 1e-9))

    def done():
        return w.tracker is None or w.tracker.complete

    if done():
        return log
    while True:
        step_world(w)
        if w.step_count % stride == 0:
            log.append(sample_world(w))
            if done():
                break
        if w.step_count >= max_steps:
            if not done():
                if w.step_count % stride:
                    log.append(sample_world(w))
                log.arrival_times = list(w.tracker.arrival_times)
                reached = w.tracker.current_index
                raise Timeout(
                    f"timeout after {w.time:.3f} s with {reached}/{len(w.tracker.waypoints)} targets reached",
                    log,
                )
    log.arrival_times = list(w.tracker.arrival_times)
    log.total_targets = len(w.tracker.waypoints)
    return log


def run_scenario(config) -> MetricsLog:
    """Build the world described by a :class:`~marsupial.config.ScenarioConfig` and run it."""
    from .config import build_world

    w = build_world(config)
    return run_world(w, config.timeout, config.log_rate)
