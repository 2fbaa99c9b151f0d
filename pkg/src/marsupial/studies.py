"""Batch studies: settled-shape fidelity against the analytic curve, and stepping cost."""

from __future__ import annotations

import csv
import math
import os
import platform
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .catenary import mean_catenary_error, solve_catenary
from .engine import SimParams, make_world, step_world
from .errors import ElementLengthUnsupported, InvalidParams
from .tether import MAX_ELEMENT_LENGTH, TetherParams, build_tether, settle
from .tracking import PTR, TrackerState, Waypoint
from .vehicles import ControllerGains

DEFAULT_SEPARATIONS = (5.0, 10.0, 15.0)
DEFAULT_ELEMENT_LENGTHS = (0.05, 0.10, 0.15, 0.20)
DEFAULT_SLACK = 1.2
# The far anchor sits above the near one along this elevation angle.
STUDY_ELEVATION_DEG = 30.0
STUDY_ROOT = (0.0, 0.0, 0.5)

DEFAULT_BENCH_COUNTS = (100, 400, 700)
DEFAULT_BENCH_ELEMENT = 0.15
DEFAULT_BENCH_SECONDS = 10.0
DEFAULT_REPETITIONS = 3


@dataclass(frozen=True)
class CatenaryCell:
    separation: float
    element_length: float
    error_pct: float
    nodes: int
    settle_time: float
    max_stretch: float


def study_anchors(separation: float) -> Tuple[np.ndarray, np.ndarray]:
    root = np.array(STUDY_ROOT)
    el = math.radians(STUDY_ELEVATION_DEG)
    return root, root + separation * np.array([math.cos(el), 0.0, math.sin(el)])


def catenary_cell(separation: float, element_length: float, slack: float = DEFAULT_SLACK,
                  duration: float = 5.0, dt: float = 1e-3, gravity: float = 9.81) -> CatenaryCell:
    """Build a tether on the analytic curve, release it, let it settle and score it."""
    if element_length > MAX_ELEMENT_LENGTH:
        raise ElementLengthUnsupported(
            f"element length {element_length} m exceeds the winch limit of {MAX_ELEMENT_LENGTH} m"
        )
    if slack <= 1.0:
        raise InvalidParams("slack factor must be > 1 for a hanging tether")
    params = TetherParams(element_length=element_length)
    root, tip = study_anchors(separation)
    length = slack * separation
    s = build_tether(params, root, tip, length)
    t = settle(s, params, gravity, dt, duration=duration, energy_threshold=1e-6, min_duration=1.0)
    err = mean_catenary_error(s.positions, solve_catenary(root, tip, length))
    stretch = float(np.max(np.abs(s.segment_lengths() / s.rest_lengths - 1.0)))
    return CatenaryCell(separation, element_length, err, s.n_nodes, t, stretch)


def _cell_args(args):
    return catenary_cell(*args)


def catenary_study(separations: Sequence[float] = DEFAULT_SEPARATIONS,
                   element_lengths: Sequence[float] = DEFAULT_ELEMENT_LENGTHS,
                   slack: float = DEFAULT_SLACK, duration: float = 5.0,
                   parallel: int = 1) -> List[CatenaryCell]:
    """Every (separation, element length) cell, element length major."""
    for e in element_lengths:
        if e > MAX_ELEMENT_LENGTH:
            raise ElementLengthUnsupported(
                f"element length {e} m exceeds the winch limit of {MAX_ELEMENT_LENGTH} m"
            )
    jobs = [(d, e, slack, duration) for e in element_lengths for d in separations]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(_cell_args, jobs))
    return [_cell_args(j) for j in jobs]


def study_table(cells: Sequence[CatenaryCell]) -> Tuple[List[str], List[List[float]]]:
    """Rows of ``element_length, err_<d>..., mean`` in percent."""
    seps = sorted({c.separation for c in cells})
    lens = sorted({c.element_length for c in cells})
    lookup = {(c.element_length, c.separation): c.error_pct for c in cells}
    header = ["element_length"] + [f"err_{d:g}" for d in seps] + ["mean"]
    rows = []
    for e in lens:
        vals = [lookup[(e, d)] for d in seps]
        rows.append([e] + vals + [sum(vals) / len(vals)])
    return header, rows


def write_study_csv(cells: Sequence[CatenaryCell], path) -> Path:
    header, rows = study_table(cells)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{row[0]:g}"] + [f"{v:.6f}" for v in row[1:]])
    return path


@dataclass(frozen=True)
class RtfRun:
    element_count: int
    sim_seconds: float
    wall_seconds: float
    rtf: float


@dataclass
class RtfReport:
    runs: List[RtfRun]
    machine: str = field(default_factory=lambda: machine_descriptor())

    def rtf_by_count(self) -> Dict[int, float]:
        return {r.element_count: r.rtf for r in self.runs}


def machine_descriptor() -> str:
    cpu = platform.processor() or platform.machine()
    return f"{platform.system()} {platform.release()} {cpu} cpus={os.cpu_count()} python={platform.python_version()}"


def hover_world(element_count: int, element_length: float = DEFAULT_BENCH_ELEMENT):
    """UAV holding position with ``element_count`` elements deployed, no obstacles.

    The UAV sits at 45 degrees elevation with 20% slack and is given enough
    thrust margin to carry the whole tether.
    """
    length = element_count * element_length
    chord = length / 1.2
    uav = np.array([chord / math.sqrt(2.0), 0.0, chord / math.sqrt(2.0)])
    gains = ControllerGains(max_accel=50.0, uav_mass=50.0, tether_compensation=1.0)
    tracker = TrackerState([Waypoint(np.zeros(3), uav.copy(), length, 0.15)], mode=PTR)
    return make_world(uav, np.zeros(3), deployed_length=length,
                      tether_params=TetherParams(element_length=element_length),
                      uav_gains=gains, tracker=tracker)


def time_hover(element_count: int, sim_seconds: float, element_length: float = DEFAULT_BENCH_ELEMENT) -> RtfRun:
    w = hover_world(element_count, element_length)
    steps = int(round(sim_seconds / w.params.dt))
    start = time.perf_counter()
    for _ in range(steps):
        step_world(w)
    wall = time.perf_counter() - start
    return RtfRun(element_count, steps * w.params.dt, wall, steps * w.params.dt / wall)


def bench_rtf(element_counts: Sequence[int] = DEFAULT_BENCH_COUNTS,
              sim_seconds: float = DEFAULT_BENCH_SECONDS,
              element_length: float = DEFAULT_BENCH_ELEMENT,
              repetitions: int = DEFAULT_REPETITIONS) -> RtfReport:
    """Run the hover world once per count and repetition, strictly one at a time.

    Each reported run uses the median wall time over its repetitions. Only
    the stepping loop is timed.
    """
    counts = [int(c) for c in element_counts]
    if len(set(counts)) < 2 and len(counts) < 2:
        raise InvalidParams("bench needs at least two element counts")
    if any(c < 1 for c in counts):
        raise InvalidParams("element counts must be >= 1")
    if not sim_seconds > 0:
        raise InvalidParams("sim_seconds must be > 0")
    if repetitions < 1:
        raise InvalidParams("repetitions must be >= 1")
    runs = []
    for c in counts:
        trials = [time_hover(c, sim_seconds, element_length) for _ in range(repetitions)]
        wall = statistics.median(t.wall_seconds for t in trials)
        sim = trials[0].sim_seconds
        runs.append(RtfRun(c, sim, wall, sim / wall))
    return RtfReport(runs)


def write_rtf_csv(report: RtfReport, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["element_count", "sim_seconds", "wall_seconds", "rtf", "machine"])
        for r in report.runs:
            w.writerow([r.element_count, repr(r.sim_seconds), repr(r.wall_seconds), repr(r.rtf), report.machine])
    return path
