"""Waypoint sequencing for both vehicles and the two tether-length policies.

Trajectory documents are YAML (JSON is accepted too, being a YAML subset)::

    mode: rtta            # or ptr
    slack_factor: 1.05    # rtta only
    waypoints:
      - ugv: [0, 0, 0]
        uav: [0, 0, 3]
        tether: 3.2       # required in ptr mode
        tolerance: 0.15   # optional
"""

from __future__ import annotations

import math
import queue
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import yaml

from .errors import ParseError, SchemaError
from .spatial import Vec3
from .winch import rtta_target

RTTA = "rtta"
PTR = "ptr"
DEFAULT_TOLERANCE = 0.15
DEFAULT_SLACK = 1.05


@dataclass(frozen=True)
class Waypoint:
    ugv_goal: Vec3
    uav_goal: Vec3
    tether_ref_length: Optional[float] = None
    arrival_tolerance: float = DEFAULT_TOLERANCE


@dataclass
class Trajectory:
    waypoints: List[Waypoint]
    mode: str = RTTA
    slack_factor: float = DEFAULT_SLACK

    def __len__(self):
        return len(self.waypoints)


def _vector(raw, where, name):
    if not isinstance(raw, (list, tuple)) or len(raw) != 3:
        raise SchemaError(f"{where}: field '{name}' must be a list of 3 numbers", field=name)
    try:
        v = np.array([float(c) for c in raw])
    except (TypeError, ValueError):
        raise SchemaError(f"{where}: field '{name}' must contain numbers", field=name) from None
    if not np.all(np.isfinite(v)):
        raise SchemaError(f"{where}: field '{name}' must be finite", field=name)
    return v


def _number(raw, where, name, minimum=None, strict=False):
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise SchemaError(f"{where}: field '{name}' must be a number", field=name)
    value = float(raw)
    if not math.isfinite(value) or (minimum is not None and (value <= minimum if strict else value < minimum)):
        bound = ">" if strict else ">="
        raise SchemaError(f"{where}: field '{name}' must be {bound} {minimum}", field=name)
    return value


def parse_document(text: str, source: str = "<document>"):
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        col = mark.column + 1 if mark is not None else None
        problem = getattr(exc, "problem", None) or str(exc)
        raise ParseError(f"{source}: {problem}", line=line, column=col) from None


def waypoints_from_records(records, mode=RTTA, where="trajectory") -> List[Waypoint]:
    if records is None:
        return []
    if not isinstance(records, list):
        raise SchemaError(f"{where}: 'waypoints' must be a list", field="waypoints")
    out = []
    for i, rec in enumerate(records):
        loc = f"{where}: waypoint {i}"
        if not isinstance(rec, dict):
            raise SchemaError(f"{loc} must be a mapping", field="waypoints")
        for required in ("ugv", "uav"):
            if required not in rec:
                raise SchemaError(f"{loc}: missing required field '{required}'", field=required)
        unknown = set(rec) - {"ugv", "uav", "tether", "tolerance"}
        if unknown:
            raise SchemaError(f"{loc}: unknown field(s) {sorted(unknown)}", field=sorted(unknown)[0])
        tether = rec.get("tether")
        if tether is not None:
            tether = _number(tether, loc, "tether", minimum=0.0)
        elif mode == PTR:
            raise SchemaError(f"{loc}: ptr mode requires field 'tether'", field="tether")
        tol = _number(rec.get("tolerance", DEFAULT_TOLERANCE), loc, "tolerance", minimum=0.0, strict=True)
        out.append(Waypoint(_vector(rec["ugv"], loc, "ugv"), _vector(rec["uav"], loc, "uav"), tether, tol))
    return out


def trajectory_from_mapping(doc, where="trajectory") -> Trajectory:
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise SchemaError(f"{where}: top level must be a mapping")
    mode = str(doc.get("mode", RTTA)).lower()
    if mode not in (RTTA, PTR):
        raise SchemaError(f"{where}: field 'mode' must be 'rtta' or 'ptr', got {mode!r}", field="mode")
    slack = _number(doc.get("slack_factor", DEFAULT_SLACK), where, "slack_factor", minimum=1.0)
    return Trajectory(waypoints_from_records(doc.get("waypoints", []), mode, where), mode, slack)


def load_trajectory(document, source: str = "<trajectory>") -> Trajectory:
    """Parse and validate a trajectory document (text or already-parsed mapping)."""
    doc = parse_document(document, source) if isinstance(document, str) else document
    return trajectory_from_mapping(doc, source)


@dataclass
class TrackerState:
    waypoints: List[Waypoint]
    mode: str = RTTA
    slack_factor: float = DEFAULT_SLACK
    current_index: int = 0
    arrival_times: List[float] = field(default_factory=list)
    commands: "queue.Queue[List[Waypoint]]" = field(default_factory=queue.Queue, repr=False, compare=False)

    def __post_init__(self):
        if self.mode == PTR:
            for i, wp in enumerate(self.waypoints):
                if wp.tether_ref_length is None:
                    raise SchemaError(f"waypoint {i}: ptr mode requires a tether length", field="tether")

    @classmethod
    def from_trajectory(cls, traj: Trajectory) -> "TrackerState":
        return cls(list(traj.waypoints), traj.mode, traj.slack_factor)

    @property
    def complete(self) -> bool:
        return self.current_index >= len(self.waypoints)

    def inject(self, waypoints: Sequence[Waypoint]) -> None:
        """Replace the not-yet-reached waypoints; safe to call from any thread.

        The request takes effect at the next :func:`advance`.
        """
        self.commands.put(list(waypoints))

    def _drain(self):
        while True:
            try:
                new = self.commands.get_nowait()
            except queue.Empty:
                return
            if self.mode == PTR and any(wp.tether_ref_length is None for wp in new):
                raise SchemaError("injected ptr waypoints need tether lengths", field="tether")
            self.waypoints = self.waypoints[: self.current_index] + new


def _planar(a, b):
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _arrived(wp: Waypoint, uav_pos, ugv_pos) -> bool:
    uav_err = float(np.linalg.norm(np.asarray(uav_pos) - wp.uav_goal))
    return uav_err <= wp.arrival_tolerance and _planar(ugv_pos, wp.ugv_goal) <= wp.arrival_tolerance


def advance(t: TrackerState, world) -> Tuple[TrackerState, Tuple[Vec3, Vec3], Optional[float]]:
    """Check arrival at the current waypoint and produce goals and a tether target.

    ``world`` needs ``time``, ``uav.position``, ``ugv.position`` and
    ``winch_exit``. The tether target is ``None`` when the policy has nothing
    to say (PTR with an empty plan).
    """
    t._drain()
    uav_pos, ugv_pos = world.uav.position, world.ugv.position
    if not t.complete and _arrived(t.waypoints[t.current_index], uav_pos, ugv_pos):
        t.arrival_times.append(float(world.time))
        t.current_index += 1

    if t.waypoints:
        wp = t.waypoints[min(t.current_index, len(t.waypoints) - 1)]
        goals = (wp.ugv_goal, wp.uav_goal)
    else:
        wp = None
        goals = (np.asarray(ugv_pos, dtype=float), np.asarray(uav_pos, dtype=float))

    if t.mode == RTTA:
        target = rtta_target(uav_pos, world.winch_exit, t.slack_factor)
    else:
        target = wp.tether_ref_length if wp is not None else None
    return t, goals, target


def progress(t: TrackerState) -> Tuple[int, int, bool]:
    reached = len(t.arrival_times)
    total = len(t.waypoints)
    return reached, total, reached >= total
