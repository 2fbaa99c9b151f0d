"""Scenario files: YAML documents describing a world, its vehicles and a trajectory.

Top-level sections (all optional except ``uav`` and ``ugv``)::

    name: scenario1
    world:
      gravity: 9.81
      ground: {height: 0.0, friction: 0.5}     # or ``ground: false``
      obstacles:
        - {type: box, min: [1, -1, 0], max: [1.4, 1, 3], name: pillar}
        - {type: sphere, center: [2, 0, 1], radius: 0.3, friction: 0.4}
    tether: {element_length: 0.15, element_mass: 0.01, ...}
    winch: {initial_length: 2.1, reserve_length: 18.45, max_reel_rate: 0.5, exit_offset: [0, 0, 0.3]}
    uav: {start: [0, 0, 2], kp: 4, kd: 4, max_speed: 1, max_accel: 4, mass: 1.5, tether_compensation: 1}
    ugv: {start: [0, 0, 0], kp: 4, max_speed: 1}
    sim: {dt: 0.001, contact_stiffness: 1000, contact_damping: 10, friction: 0.5, projection_iterations: 4}
    trajectory: {mode: rtta, slack_factor: 1.05, waypoints: [...]}
    # or: trajectory: path.yaml, or {file: path.yaml, mode: ptr}
    logging: {rate: 100}
    output: out/scenario1
    timeout: 60

Relative paths are resolved against the scenario file's directory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .engine import SimParams, WorldState, make_world
from .errors import ConfigError, InvalidParams, SchemaError
from .spatial import Box, Obstacle, Sphere, ground_box
from .tether import DEFAULT_RESERVE_LENGTH, TetherParams
from .tracking import Trajectory, TrackerState, parse_document, trajectory_from_mapping
from .vehicles import ControllerGains
from .winch import DEFAULT_REEL_RATE, WinchState

DEFAULT_LOG_RATE = 100.0
DEFAULT_TIMEOUT = 120.0


@dataclass
class ScenarioConfig:
    uav_start: np.ndarray
    ugv_start: np.ndarray
    trajectory: Trajectory = field(default_factory=lambda: Trajectory([]))
    name: str = "scenario"
    gravity: float = 9.81
    obstacles: List[Obstacle] = field(default_factory=list)
    tether: TetherParams = field(default_factory=TetherParams)
    initial_length: Optional[float] = None
    reserve_length: float = DEFAULT_RESERVE_LENGTH
    max_reel_rate: float = DEFAULT_REEL_RATE
    exit_offset: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    uav_gains: ControllerGains = field(default_factory=ControllerGains)
    ugv_gains: ControllerGains = field(default_factory=ControllerGains)
    sim: SimParams = field(default_factory=SimParams)
    log_rate: float = DEFAULT_LOG_RATE
    output: Optional[Path] = None
    timeout: float = DEFAULT_TIMEOUT
    source: Optional[Path] = None


def _section(doc, key, where) -> Dict[str, Any]:
    value = doc.get(key)
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise SchemaError(f"{where}: section '{key}' must be a mapping", field=key)
    return value


def _reject_unknown(section: dict, allowed, where, prefix):
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        name = f"{prefix}.{unknown[0]}" if prefix else str(unknown[0])
        raise SchemaError(f"{where}: unknown field '{name}'", field=name)


def _num(section, key, where, prefix, default=None, required=False):
    if key not in section or section[key] is None:
        if required:
            raise SchemaError(f"{where}: missing required field '{prefix}.{key}'", field=f"{prefix}.{key}")
        return default
    raw = section[key]
    if isinstance(raw, bool) or not isinstance(raw, (int, float)) or not math.isfinite(float(raw)):
        raise SchemaError(f"{where}: field '{prefix}.{key}' must be a finite number", field=f"{prefix}.{key}")
    return float(raw)


def _vec(section, key, where, prefix, default=None, required=False):
    if key not in section or section[key] is None:
        if required:
            raise SchemaError(f"{where}: missing required field '{prefix}.{key}'", field=f"{prefix}.{key}")
        return default
    raw = section[key]
    ok = isinstance(raw, (list, tuple)) and len(raw) == 3 and all(
        isinstance(c, (int, float)) and not isinstance(c, bool) and math.isfinite(float(c)) for c in raw
    )
    if not ok:
        raise SchemaError(f"{where}: field '{prefix}.{key}' must be a list of 3 numbers", field=f"{prefix}.{key}")
    return np.array([float(c) for c in raw])


def _build(cls, kwargs, where, prefix):
    try:
        return cls(**kwargs)
    except InvalidParams as exc:
        raise SchemaError(f"{where}: invalid '{prefix}' section: {exc}", field=prefix) from None


def _obstacles(world, default_friction, where) -> List[Obstacle]:
    out: List[Obstacle] = []
    ground = world.get("ground", {})
    if ground is not False:
        if ground is True or ground is None:
            ground = {}
        if not isinstance(ground, dict):
            raise SchemaError(f"{where}: 'world.ground' must be a mapping or false", field="world.ground")
        _reject_unknown(ground, ("height", "friction"), where, "world.ground")
        out.append(ground_box(
            _num(ground, "height", where, "world.ground", 0.0),
            _num(ground, "friction", where, "world.ground", default_friction),
        ))
    items = world.get("obstacles") or []
    if not isinstance(items, list):
        raise SchemaError(f"{where}: 'world.obstacles' must be a list", field="world.obstacles")
    for i, item in enumerate(items):
        prefix = f"world.obstacles[{i}]"
        if not isinstance(item, dict):
            raise SchemaError(f"{where}: '{prefix}' must be a mapping", field=prefix)
        kind = item.get("type")
        mu = _num(item, "friction", where, prefix, default_friction)
        name = str(item.get("name", f"obstacle{i}"))
        if kind == "box":
            _reject_unknown(item, ("type", "min", "max", "friction", "name"), where, prefix)
            kwargs = dict(min_corner=tuple(_vec(item, "min", where, prefix, required=True)),
                          max_corner=tuple(_vec(item, "max", where, prefix, required=True)),
                          friction_coeff=mu, name=name)
            out.append(_build(Box, kwargs, where, prefix))
        elif kind == "sphere":
            _reject_unknown(item, ("type", "center", "radius", "friction", "name"), where, prefix)
            kwargs = dict(center=tuple(_vec(item, "center", where, prefix, required=True)),
                          radius=_num(item, "radius", where, prefix, required=True),
                          friction_coeff=mu, name=name)
            out.append(_build(Sphere, kwargs, where, prefix))
        else:
            raise SchemaError(f"{where}: '{prefix}.type' must be 'box' or 'sphere', got {kind!r}",
                              field=f"{prefix}.type")
    return out


_TOP_KEYS = ("name", "world", "tether", "winch", "uav", "ugv", "sim", "trajectory", "logging", "output", "timeout")
_TETHER_KEYS = tuple(f.name for f in fields(TetherParams))


def config_from_mapping(doc, source: Optional[Path] = None) -> ScenarioConfig:
    where = str(source) if source is not None else "<config>"
    base = source.parent if source is not None else Path.cwd()
    if not isinstance(doc, dict):
        raise SchemaError(f"{where}: top level must be a mapping")
    _reject_unknown(doc, _TOP_KEYS, where, "")

    sim_doc = _section(doc, "sim", where)
    _reject_unknown(sim_doc, ("dt", "contact_stiffness", "contact_damping", "friction", "projection_iterations"),
                    where, "sim")
    world = _section(doc, "world", where)
    _reject_unknown(world, ("gravity", "ground", "obstacles"), where, "world")
    sim_defaults = SimParams()
    friction = _num(sim_doc, "friction", where, "sim", sim_defaults.friction_coeff)
    iterations = sim_doc.get("projection_iterations", sim_defaults.projection_iterations)
    if isinstance(iterations, bool) or not isinstance(iterations, int):
        raise SchemaError(f"{where}: 'sim.projection_iterations' must be an integer", field="sim.projection_iterations")
    sim = _build(SimParams, dict(
        dt=_num(sim_doc, "dt", where, "sim", sim_defaults.dt),
        gravity=_num(world, "gravity", where, "world", sim_defaults.gravity),
        contact_stiffness=_num(sim_doc, "contact_stiffness", where, "sim", sim_defaults.contact_stiffness),
        contact_damping=_num(sim_doc, "contact_damping", where, "sim", sim_defaults.contact_damping),
        friction_coeff=friction,
        projection_iterations=iterations,
    ), where, "sim")

    tether_doc = _section(doc, "tether", where)
    _reject_unknown(tether_doc, _TETHER_KEYS, where, "tether")
    tether_kwargs = {}
    for key, value in tether_doc.items():
        if key == "inextensible_mode":
            if not isinstance(value, bool):
                raise SchemaError(f"{where}: 'tether.inextensible_mode' must be true or false",
                                  field="tether.inextensible_mode")
            tether_kwargs[key] = value
        else:
            tether_kwargs[key] = _num(tether_doc, key, where, "tether")
    tether = _build(TetherParams, tether_kwargs, where, "tether")

    winch = _section(doc, "winch", where)
    _reject_unknown(winch, ("initial_length", "reserve_length", "max_reel_rate", "exit_offset"), where, "winch")

    uav = _section(doc, "uav", where)
    ugv = _section(doc, "ugv", where)
    _reject_unknown(uav, ("start", "kp", "kd", "max_speed", "max_accel", "mass", "tether_compensation"), where, "uav")
    _reject_unknown(ugv, ("start", "kp", "max_speed"), where, "ugv")
    g0 = ControllerGains()
    uav_gains = _build(ControllerGains, dict(
        kp=_num(uav, "kp", where, "uav", g0.kp), kd=_num(uav, "kd", where, "uav", g0.kd),
        max_speed=_num(uav, "max_speed", where, "uav", g0.max_speed),
        max_accel=_num(uav, "max_accel", where, "uav", g0.max_accel),
        uav_mass=_num(uav, "mass", where, "uav", g0.uav_mass),
        tether_compensation=_num(uav, "tether_compensation", where, "uav", g0.tether_compensation),
    ), where, "uav")
    ugv_gains = _build(ControllerGains, dict(
        kp=_num(ugv, "kp", where, "ugv", g0.kp), max_speed=_num(ugv, "max_speed", where, "ugv", g0.max_speed),
    ), where, "ugv")

    raw_traj = doc.get("trajectory")
    if isinstance(raw_traj, str):
        raw_traj = {"file": raw_traj}
    if isinstance(raw_traj, dict) and "file" in raw_traj:
        # A waypoint file, optionally with the policy overridden here.
        _reject_unknown(raw_traj, ("file", "mode", "slack_factor"), where, "trajectory")
        path = Path(str(raw_traj["file"]))
        if not path.is_absolute():
            path = (base / path).resolve()
        if not path.is_file():
            raise SchemaError(f"{where}: trajectory file not found: {path}", field="trajectory.file")
        traj_doc = parse_document(path.read_text(), str(path))
        if not isinstance(traj_doc, dict):
            raise SchemaError(f"{path}: top level must be a mapping")
        traj_doc = {**traj_doc, **{k: v for k, v in raw_traj.items() if k != "file"}}
        trajectory = trajectory_from_mapping(traj_doc, str(path))
    else:
        trajectory = trajectory_from_mapping(raw_traj, f"{where}: trajectory")

    logging = _section(doc, "logging", where)
    _reject_unknown(logging, ("rate",), where, "logging")
    log_rate = _num(logging, "rate", where, "logging", DEFAULT_LOG_RATE)
    if not log_rate > 0:
        raise SchemaError(f"{where}: 'logging.rate' must be > 0", field="logging.rate")
    timeout = _num(doc, "timeout", where, "config", DEFAULT_TIMEOUT)
    if not timeout > 0:
        raise SchemaError(f"{where}: 'timeout' must be > 0", field="timeout")
    initial = _num(winch, "initial_length", where, "winch")
    reserve = _num(winch, "reserve_length", where, "winch", DEFAULT_RESERVE_LENGTH)
    reel = _num(winch, "max_reel_rate", where, "winch", DEFAULT_REEL_RATE)
    if initial is not None and initial < 0:
        raise SchemaError(f"{where}: 'winch.initial_length' must be >= 0", field="winch.initial_length")
    if reserve < 0 or not reel > 0:
        raise SchemaError(f"{where}: winch needs reserve_length >= 0 and max_reel_rate > 0", field="winch")
    output = doc.get("output")
    if output is not None:
        output = Path(str(output))
        if not output.is_absolute():
            output = base / output

    return ScenarioConfig(
        uav_start=_vec(uav, "start", where, "uav", required=True),
        ugv_start=_vec(ugv, "start", where, "ugv", required=True),
        trajectory=trajectory,
        name=str(doc.get("name", source.stem if source is not None else "scenario")),
        gravity=sim.gravity,
        obstacles=_obstacles(world, friction, where),
        tether=tether,
        initial_length=initial,
        reserve_length=reserve,
        max_reel_rate=reel,
        exit_offset=tuple(_vec(winch, "exit_offset", where, "winch", np.zeros(3))),
        uav_gains=uav_gains,
        ugv_gains=ugv_gains,
        sim=sim,
        log_rate=log_rate,
        output=output,
        timeout=timeout,
        source=source,
    )


SCENARIO_DIR = Path(__file__).parent / "scenarios"


def resolve_scenario(path) -> Path:
    """A file path, or the name of a bundled scenario such as ``scenario1``."""
    path = Path(path)
    if path.exists():
        return path
    for candidate in (SCENARIO_DIR / path.name, SCENARIO_DIR / f"{path.name}.yaml",
                      SCENARIO_DIR / f"{path.stem}.yaml"):
        if candidate.is_file():
            return candidate
    return path


def load_config(path) -> ScenarioConfig:
    """Read and validate a scenario file (or a bundled scenario name)."""
    path = resolve_scenario(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    return config_from_mapping(parse_document(text, str(path)), path.resolve())


def build_world(config: ScenarioConfig) -> WorldState:
    """World at time zero: tether laid on its hanging curve between the exit and the UAV."""
    exit_point = np.asarray(config.ugv_start) + np.asarray(config.exit_offset)
    initial = config.initial_length
    if initial is None:
        initial = config.trajectory.slack_factor * float(np.linalg.norm(np.asarray(config.uav_start) - exit_point))
    try:
        winch = WinchState.create(initial, config.reserve_length, config.max_reel_rate, config.exit_offset)
        tracker = TrackerState.from_trajectory(config.trajectory)
        return make_world(
            config.uav_start, config.ugv_start, tether_params=config.tether, params=config.sim,
            obstacles=config.obstacles, uav_gains=config.uav_gains, ugv_gains=config.ugv_gains,
            winch=winch, tracker=tracker,
        )
    except InvalidParams as exc:
        raise SchemaError(f"{config.source or '<config>'}: {exc}") from None
