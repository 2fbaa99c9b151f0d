"""Rate-limited winch that pays out and reels in tether at the UGV.

Material is conserved: the drum holds ``total_length - deployed_length``.
Changing the deployed length changes the rest length of the root segment;
whenever that segment would exceed a full element a node is spawned at the
winch exit, and when it would vanish the node next to the root is absorbed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

from .errors import InvalidParams, InvalidTarget
from .spatial import Vec3, distance
from .tether import (
    DEFAULT_RESERVE_LENGTH,
    TetherParams,
    TetherState,
    node_masses,
    segment_count,
)

DEFAULT_REEL_RATE = 0.5


@dataclass(frozen=True)
class WinchState:
    deployed_length: float
    total_length: float
    target_length: float
    max_reel_rate: float = DEFAULT_REEL_RATE
    exit_point_offset: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.deployed_length < 0 or self.total_length < self.deployed_length:
            raise InvalidParams(
                f"need 0 <= deployed ({self.deployed_length}) <= total ({self.total_length})"
            )
        if not self.max_reel_rate > 0:
            raise InvalidParams("max_reel_rate must be > 0")

    @classmethod
    def create(cls, deployed_length, reserve_length=DEFAULT_RESERVE_LENGTH,
               max_reel_rate=DEFAULT_REEL_RATE, exit_point_offset=(0.0, 0.0, 0.0),
               target_length=None):
        if reserve_length < 0:
            raise InvalidParams("reserve_length must be >= 0")
        return cls(
            deployed_length=float(deployed_length),
            total_length=float(deployed_length) + float(reserve_length),
            target_length=float(deployed_length if target_length is None else target_length),
            max_reel_rate=float(max_reel_rate),
            exit_point_offset=tuple(float(c) for c in exit_point_offset),
        )

    @property
    def reserve_length(self) -> float:
        return self.total_length - self.deployed_length

    def exit_point(self, ugv_position: Vec3) -> Vec3:
        return np.asarray(ugv_position, dtype=float) + np.asarray(self.exit_point_offset)


def command_target(w: WinchState, target: float) -> WinchState:
    """Store a new length target, clamped to the material on the drum."""
    if target < 0:
        raise InvalidTarget(f"target length must be >= 0, got {target}")
    return replace(w, target_length=min(float(target), w.total_length))


def rtta_target(uav_pos: Vec3, winch_exit: Vec3, slack_factor: float) -> float:
    """Length target proportional to the UAV to winch-exit distance."""
    if slack_factor < 1:
        raise InvalidParams(f"slack_factor must be >= 1, got {slack_factor}")
    return slack_factor * distance(uav_pos, winch_exit)


def resize_tether(
    tether: TetherState,
    params: TetherParams,
    deployed_length: float,
    exit_point: Vec3,
    exit_velocity: Vec3 = (0.0, 0.0, 0.0),
    tip_point: Vec3 = None,
) -> Tuple[TetherState, int, int]:
    """Spawn or absorb root-side nodes so the chain holds ``deployed_length``.

    Returns the tether (modified in place) with the number of spawned and
    absorbed nodes.
    """
    e = params.element_length
    needed = segment_count(deployed_length, e)
    pos, vel, rest = tether.positions, tether.velocities, tether.rest_lengths
    exit_point = np.asarray(exit_point, dtype=float)
    exit_velocity = np.asarray(exit_velocity, dtype=float)
    spawned = absorbed = 0

    if len(rest) == 0 and needed > 0:
        # Growing from an empty chain: the lone node stays at the root and a
        # tip node appears at the UAV attachment.
        tip = exit_point if tip_point is None else np.asarray(tip_point, dtype=float)
        pos = np.vstack([exit_point, tip])
        vel = np.zeros((2, 3))
        rest = np.array([e])
        spawned += 1

    count = len(rest)
    if needed > count:
        extra = needed - count
        # The new nodes sit on the chord between the exit and the old first
        # free node, one element apart, as material leaves the drum.
        old_first = pos[1]
        old_vel = vel[1]
        new_root_rest = deployed_length - (needed - 1) * e
        span = new_root_rest + extra * e
        fracs = (new_root_rest + e * np.arange(extra)) / span
        new_pos = exit_point + np.outer(fracs, old_first - exit_point)
        new_vel = exit_velocity + np.outer(fracs, old_vel - exit_velocity)
        pos = np.vstack([pos[:1], new_pos, pos[1:]])
        vel = np.vstack([vel[:1], new_vel, vel[1:]])
        rest = np.concatenate([[e] * extra, rest])
        spawned += extra
    elif needed < count:
        drop = count - needed
        if needed == 0:
            pos, vel, rest = pos[:1], vel[:1], rest[:0]
        else:
            pos = np.vstack([pos[:1], pos[1 + drop:]])
            vel = np.vstack([vel[:1], vel[1 + drop:]])
            rest = rest[drop:].copy()
        absorbed += drop

    if len(rest):
        rest = np.full(len(rest), e)
        rest[0] = deployed_length - (len(rest) - 1) * e
    tether.positions = np.array(pos, dtype=float)
    tether.velocities = np.array(vel, dtype=float)
    tether.rest_lengths = rest
    if spawned or absorbed:
        tether.masses = node_masses(len(tether.positions), params.element_mass)
    return tether, spawned, absorbed


def step_winch(
    w: WinchState,
    tether: TetherState,
    dt: float,
    params: TetherParams = TetherParams(),
    ugv_position: Vec3 = (0.0, 0.0, 0.0),
    ugv_velocity: Vec3 = (0.0, 0.0, 0.0),
    tip_point: Vec3 = None,
) -> Tuple[WinchState, TetherState]:
    """Move the deployed length towards the target, at most ``max_reel_rate * dt``."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    limit = w.max_reel_rate * dt
    delta = min(max(w.target_length - w.deployed_length, -limit), limit)
    deployed = min(max(w.deployed_length + delta, 0.0), w.total_length)
    new_w = replace(w, deployed_length=deployed)
    if deployed != w.deployed_length or segment_count(deployed, params.element_length) != tether.n_segments:
        resize_tether(tether, params, deployed, new_w.exit_point(ugv_position), ugv_velocity, tip_point)
    return new_w, tether


def is_saturated(w: WinchState) -> bool:
    """True when the last step could not close the gap to the target."""
    return abs(w.target_length - w.deployed_length) > 1e-12
