"""Minimal SVG line charts: axes, polylines and a legend.

Output depends only on the input data, so charts regenerate byte-identically
from the same CSV files.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import List, Optional, Sequence, Tuple
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")
WIDTH, HEIGHT = 720, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 150, 40, 50

Series = Tuple[str, Sequence[float], Sequence[float]]


def _nice_ticks(lo: float, hi: float, count: int = 5) -> List[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return []
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(round(v, 12))
        v += step
    return ticks


def _bounds(values: np.ndarray) -> Tuple[float, float]:
    finite = values[np.isfinite(values)]
    if not finite.size:
        return 0.0, 1.0
    lo, hi = float(finite.min()), float(finite.max())
    if hi - lo < 1e-12:
        pad = max(abs(lo) * 0.05, 0.5)
        return lo - pad, hi + pad
    pad = 0.04 * (hi - lo)
    return lo - pad, hi + pad


def line_chart(series: Sequence[Series], title: str, xlabel: str, ylabel: str,
               equal_aspect: bool = False) -> str:
    """Render ``(label, xs, ys)`` series as an SVG document string."""
    xs_all = np.concatenate([np.asarray(s[1], dtype=float) for s in series]) if series else np.zeros(0)
    ys_all = np.concatenate([np.asarray(s[2], dtype=float) for s in series]) if series else np.zeros(0)
    x0, x1 = _bounds(xs_all)
    y0, y1 = _bounds(ys_all)
    pw, ph = WIDTH - MARGIN_L - MARGIN_R, HEIGHT - MARGIN_T - MARGIN_B
    if equal_aspect:
        scale = max((x1 - x0) / pw, (y1 - y0) / ph)
        cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        x0, x1 = cx - 0.5 * scale * pw, cx + 0.5 * scale * pw
        y0, y1 = cy - 0.5 * scale * ph, cy + 0.5 * scale * ph

    def px(x):
        return MARGIN_L + (x - x0) / (x1 - x0) * pw

    def py(y):
        return MARGIN_T + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{MARGIN_L + pw / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>',
    ]
    for t in _nice_ticks(x0, x1):
        x = px(t)
        out.append(f'<line x1="{x:.2f}" y1="{MARGIN_T}" x2="{x:.2f}" y2="{MARGIN_T + ph}" stroke="#ddd"/>')
        out.append(f'<text x="{x:.2f}" y="{MARGIN_T + ph + 16}" text-anchor="middle">{t:g}</text>')
    for t in _nice_ticks(y0, y1):
        y = py(t)
        out.append(f'<line x1="{MARGIN_L}" y1="{y:.2f}" x2="{MARGIN_L + pw}" y2="{y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{MARGIN_L - 6}" y="{y + 4:.2f}" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{MARGIN_L + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text transform="translate(16,{MARGIN_T + ph / 2:.1f}) rotate(-90)" '
               f'text-anchor="middle">{escape(ylabel)}</text>')
    for i, (label, xs, ys) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = [(px(x), py(y)) for x, y in zip(xs, ys) if math.isfinite(x) and math.isfinite(y)]
        if len(pts) == 1:
            out.append(f'<circle cx="{pts[0][0]:.2f}" cy="{pts[0][1]:.2f}" r="3" fill="{color}"/>')
        elif pts:
            path = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = MARGIN_T + 14 + 18 * i
        lx = MARGIN_L + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def save_chart(path, series: Sequence[Series], title: str, xlabel: str, ylabel: str,
               equal_aspect: bool = False) -> Path:
    path = Path(path)
    path.write_text(line_chart(series, title, xlabel, ylabel, equal_aspect))
    return path


def run_charts(log, out_dir, obstacles=()) -> List[Path]:
    """Chart files for one run: paths, positions against references, velocities,
    tether length against target and vehicle distance, and obstacle clearance."""
    from .spatial import min_distance

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t = log.series("t")
    uav, ugv = log.series("uav_pos"), log.series("ugv_pos")
    goal = log.series("uav_goal")
    uvel, gvel = log.series("uav_vel"), log.series("ugv_vel")
    if len(t) == 0:
        return []
    paths = [
        save_chart(out / "path_xy.svg", [("UAV", uav[:, 0], uav[:, 1]), ("UGV", ugv[:, 0], ugv[:, 1])],
                   "Paths, top view", "x (m)", "y (m)", equal_aspect=True),
        save_chart(out / "path_xz.svg", [("UAV", uav[:, 0], uav[:, 2]), ("UGV", ugv[:, 0], ugv[:, 2])],
                   "Paths, side view", "x (m)", "z (m)", equal_aspect=True),
    ]
    for k, axis in enumerate("xyz"):
        paths.append(save_chart(
            out / f"uav_{axis}.svg", [("UAV", t, uav[:, k]), ("reference", t, goal[:, k])],
            f"UAV {axis} against reference", "t (s)", f"{axis} (m)"))
        paths.append(save_chart(
            out / f"ugv_{axis}.svg", [("UGV", t, ugv[:, k])], f"UGV {axis}", "t (s)", f"{axis} (m)"))
    paths.append(save_chart(out / "uav_vel.svg", [(f"v{a}", t, uvel[:, k]) for k, a in enumerate("xyz")],
                            "UAV velocity", "t (s)", "m/s"))
    paths.append(save_chart(out / "ugv_vel.svg", [(f"v{a}", t, gvel[:, k]) for k, a in enumerate("xyz")],
                            "UGV velocity", "t (s)", "m/s"))
    roots = np.array([s.tether_nodes[0] if len(s.tether_nodes) else s.ugv_pos for s in log.samples])
    dist = np.linalg.norm(uav - roots, axis=1)
    paths.append(save_chart(out / "tether_length.svg", [
        ("deployed", t, log.series("deployed_length")),
        ("target", t, log.series("target_length")),
        ("UAV to winch distance", t, dist),
    ], "Tether length", "t (s)", "m"))
    clearance = []
    for s in log.samples:
        pts = np.vstack([s.uav_pos[None, :], np.atleast_2d(s.tether_nodes)])
        clearance.append(min_distance(pts, obstacles))
    paths.append(save_chart(out / "min_dist.svg", [("tether and UAV", t, np.array(clearance))],
                            "Minimum obstacle distance", "t (s)", "m"))
    return paths
