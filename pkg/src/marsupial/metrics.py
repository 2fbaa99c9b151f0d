"""Run metrics: travelled distance, tether released/collected, catenary error.

Logs are written as four CSV files with fixed headers:

``uav.csv``      ``t,ux,uy,uz,uvx,uvy,uvz,gx,gy,gz,target_idx``
``ugv.csv``      ``t,gx_,gy_,gz_,gvx,gvy,gvz,deployed,target_len``
``tether.csv``   ``t,node_idx,x,y,z``
``summary.csv``  one header row and one data row, in :class:`MetricsSummary` field order

Floats are written with ``repr`` so a round trip is lossless.
"""

from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .catenary import mean_catenary_error, solve_catenary, VERTICAL_TOLERANCE
from .errors import EmptyLog
from .spatial import Obstacle, min_distance

UAV_HEADER = ["t", "ux", "uy", "uz", "uvx", "uvy", "uvz", "gx", "gy", "gz", "target_idx"]
UGV_HEADER = ["t", "gx_", "gy_", "gz_", "gvx", "gvy", "gvz", "deployed", "target_len"]
TETHER_HEADER = ["t", "node_idx", "x", "y", "z"]


@dataclass
class Sample:
    t: float
    uav_pos: np.ndarray
    ugv_pos: np.ndarray
    uav_vel: np.ndarray
    ugv_vel: np.ndarray
    uav_goal: np.ndarray
    deployed_length: float
    target_length: float
    tether_nodes: np.ndarray
    min_obstacle_dist: float = math.nan
    current_target_index: int = 0


@dataclass
class MetricsLog:
    samples: List[Sample] = field(default_factory=list)
    total_targets: int = 0
    arrival_times: List[float] = field(default_factory=list)

    def append(self, sample: Sample) -> None:
        if self.samples and not sample.t > self.samples[-1].t:
            raise ValueError("samples must have strictly increasing time")
        self.samples.append(sample)

    def __len__(self):
        return len(self.samples)

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.samples])


@dataclass
class MetricsSummary:
    sim_time: float
    targets: int
    dist_ugv: float
    dist_uav: float
    tether_released: float
    tether_collected: float
    cat_error: float
    min_dist: float
    cat_skipped: int = 0
    targets_total: int = 0

    @classmethod
    def header(cls) -> List[str]:
        return [f.name for f in fields(cls)]


def path_distance(points) -> float:
    """Sum of chord lengths along an ordered point sequence."""
    total = 0.0
    prev = None
    for p in points:
        p = np.asarray(p, dtype=float)
        if prev is not None:
            d = p - prev
            total += math.sqrt(float(np.dot(d, d)))
        prev = p
    return total


def tether_released(lengths: Sequence[float]) -> float:
    """Sum of positive length increments, accumulated left to right."""
    total = 0.0
    for a, b in zip(lengths, lengths[1:]):
        if b > a:
            total += b - a
    return total


def tether_collected(lengths: Sequence[float]) -> float:
    """Sum of negative length increments, accumulated left to right."""
    total = 0.0
    for a, b in zip(lengths, lengths[1:]):
        if a > b:
            total += a - b
    return total


def sample_catenary_error(nodes: np.ndarray, deployed_length: float) -> Optional[float]:
    """Catenary error of one logged tether shape, ``None`` if the curve is degenerate."""
    nodes = np.atleast_2d(nodes)
    if len(nodes) < 2:
        return None
    root, tip = nodes[0], nodes[-1]
    delta = tip - root
    if math.hypot(delta[0], delta[1]) < VERTICAL_TOLERANCE:
        return None
    if deployed_length <= float(np.linalg.norm(delta)):
        return None
    return mean_catenary_error(nodes, solve_catenary(root, tip, deployed_length))


def summarize(log: MetricsLog, obstacles: Sequence[Obstacle] = (), cat_stride: int = 1) -> MetricsSummary:
    """Reduce a log to the headline run metrics.

    ``cat_stride`` scores every n-th sample for the catenary error; the rest
    of the metrics always use every sample.
    """
    if not log.samples:
        raise EmptyLog("cannot summarise an empty log")
    samples = log.samples
    lengths = [s.deployed_length for s in samples]
    errors, skipped = [], 0
    for s in samples[::cat_stride]:
        err = sample_catenary_error(s.tether_nodes, s.deployed_length)
        if err is None:
            skipped += 1
        else:
            errors.append(err)
    dists = []
    for s in samples:
        d = s.min_obstacle_dist
        if math.isnan(d):
            d = min_distance(np.vstack([s.uav_pos[None, :], np.atleast_2d(s.tether_nodes)]), obstacles)
        dists.append(d)
    reached = samples[-1].current_target_index
    return MetricsSummary(
        sim_time=samples[-1].t - samples[0].t,
        targets=int(reached),
        dist_ugv=path_distance(s.ugv_pos for s in samples),
        dist_uav=path_distance(s.uav_pos for s in samples),
        tether_released=tether_released(lengths),
        tether_collected=tether_collected(lengths),
        cat_error=float(np.mean(errors)) if errors else 0.0,
        min_dist=float(min(dists)),
        cat_skipped=skipped,
        targets_total=int(max(log.total_targets, reached)),
    )


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def write_csv(log: MetricsLog, summary: MetricsSummary, out_dir) -> Dict[str, Path]:
    """Write the four CSV files into ``out_dir`` and return their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / f"{name}.csv" for name in ("uav", "ugv", "tether", "summary")}
    with open(paths["uav"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(UAV_HEADER)
        for s in log.samples:
            w.writerow([_fmt(v) for v in (s.t, *s.uav_pos, *s.uav_vel, *s.uav_goal)] + [str(int(s.current_target_index))])
    with open(paths["ugv"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(UGV_HEADER)
        for s in log.samples:
            w.writerow([_fmt(v) for v in (s.t, *s.ugv_pos, *s.ugv_vel, s.deployed_length, s.target_length)])
    with open(paths["tether"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TETHER_HEADER)
        for s in log.samples:
            t = _fmt(s.t)
            for i, p in enumerate(np.atleast_2d(s.tether_nodes)):
                w.writerow([t, str(i), _fmt(p[0]), _fmt(p[1]), _fmt(p[2])])
    with open(paths["summary"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MetricsSummary.header())
        w.writerow([_fmt(v) for v in astuple(summary)])
    return paths


def _read_rows(path: Path, header: List[str]) -> List[List[str]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != header:
        raise ValueError(f"{path}: unexpected header {rows[0] if rows else None}")
    return rows[1:]


def read_csv(in_dir) -> MetricsLog:
    """Rebuild a :class:`MetricsLog` from files written by :func:`write_csv`.

    The obstacle distance is not stored per sample and comes back as NaN.
    """
    d = Path(in_dir)
    uav = _read_rows(d / "uav.csv", UAV_HEADER)
    ugv = _read_rows(d / "ugv.csv", UGV_HEADER)
    tether_rows = _read_rows(d / "tether.csv", TETHER_HEADER)
    if len(uav) != len(ugv):
        raise ValueError("uav.csv and ugv.csv have different row counts")
    nodes: Dict[str, List[List[float]]] = {}
    for t, _, x, y, z in tether_rows:
        nodes.setdefault(t, []).append([float(x), float(y), float(z)])
    log = MetricsLog()
    for ua, ug in zip(uav, ugv):
        if ua[0] != ug[0]:
            raise ValueError(f"time mismatch between uav.csv ({ua[0]}) and ugv.csv ({ug[0]})")
        vals = [float(v) for v in ua[1:10]]
        gvals = [float(v) for v in ug[1:]]
        log.append(Sample(
            t=float(ua[0]),
            uav_pos=np.array(vals[0:3]), uav_vel=np.array(vals[3:6]), uav_goal=np.array(vals[6:9]),
            ugv_pos=np.array(gvals[0:3]), ugv_vel=np.array(gvals[3:6]),
            deployed_length=gvals[6], target_length=gvals[7],
            tether_nodes=np.array(nodes.get(ua[0], [])).reshape(-1, 3),
            current_target_index=int(ua[10]),
        ))
    summary_path = d / "summary.csv"
    if summary_path.exists():
        rows = _read_rows(summary_path, MetricsSummary.header())
        if rows:
            log.total_targets = int(rows[0][MetricsSummary.header().index("targets_total")])
    return log


def read_summary(path) -> MetricsSummary:
    rows = _read_rows(Path(path), MetricsSummary.header())
    values = []
    for f, raw in zip(fields(MetricsSummary), rows[0]):
        values.append(int(raw) if f.type in ("int", int) else float(raw))
    return MetricsSummary(*values)
