"""Point-mass UAV under PD position control and a holonomic kinematic UGV."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import InvalidParams
from .spatial import Vec3, clamp_norm, vec3

UAV = "uav"
UGV = "ugv"


@dataclass(frozen=True)
class ControllerGains:
    kp: float = 4.0
    kd: float = 4.0
    max_speed: float = 1.0
    max_accel: float = 4.0
    uav_mass: float = 1.5
    # Fraction of the modelled static tether load cancelled by extra thrust;
    # used by the engine, 0 means the tether is a pure disturbance.
    tether_compensation: float = 0.0

    def __post_init__(self):
        for name in ("kp", "kd", "max_speed", "max_accel", "uav_mass"):
            if not getattr(self, name) > 0:
                raise InvalidParams(f"{name} must be > 0")
        if not 0.0 <= self.tether_compensation <= 1.0:
            raise InvalidParams("tether_compensation must be in [0, 1]")


@dataclass(frozen=True)
class VehicleState:
    position: Vec3
    velocity: Vec3
    goal: Vec3
    kind: str = UAV

    @classmethod
    def at(cls, position, kind=UAV, goal=None):
        p = vec3(position)
        return cls(p, np.zeros(3), p.copy() if goal is None else vec3(goal), kind)

    def with_goal(self, goal) -> "VehicleState":
        goal = vec3(goal)
        if self.kind == UGV:
            goal = np.array([goal[0], goal[1], self.position[2]])
        return replace(self, goal=goal)


def uav_command_accel(v: VehicleState, g: ControllerGains) -> Vec3:
    """PD acceleration towards the goal, before any tether forces."""
    raw = g.kp * (v.goal - v.position) - g.kd * v.velocity
    return clamp_norm(raw, g.max_accel)


def uav_step(
    v: VehicleState,
    g: ControllerGains,
    tether_tension: Vec3 = (0.0, 0.0, 0.0),
    dt: float = 1e-3,
    feedforward: Optional[Vec3] = None,
) -> VehicleState:
    """Advance the UAV one semi-implicit Euler step.

    Hover thrust cancels gravity; ``tether_tension`` is the force the tether
    exerts on the body and ``feedforward`` any extra commanded thrust (N).
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    force = np.asarray(tether_tension, dtype=float)
    if feedforward is not None:
        force = force + np.asarray(feedforward, dtype=float)
    accel = uav_command_accel(v, g) + force / g.uav_mass
    vel = clamp_norm(v.velocity + dt * accel, g.max_speed)
    return replace(v, position=v.position + dt * vel, velocity=vel)


def ugv_step(v: VehicleState, g: ControllerGains, dt: float = 1e-3) -> VehicleState:
    """Move the UGV in the ground plane with a saturated proportional velocity law."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    err = v.goal - v.position
    err[2] = 0.0
    vel = clamp_norm(g.kp * err, g.max_speed)
    return replace(v, position=v.position + dt * vel, velocity=vel)
