"""Analytic hanging-cable reference curve.

The curve through two anchors with a prescribed arc length is the usual
``z = c + a cosh((u - u_v) / a)`` profile in the vertical plane that contains
both anchors. ``u`` is the horizontal coordinate measured from ``anchor_a``
towards ``anchor_b``. Two degenerate cases are handled explicitly: a taut
(straight) cable and a vertical, doubled-over cable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import LengthTooShort, NumericalFailure
from .spatial import Vec3, vec3

SLACK_TOLERANCE = 1e-9
VERTICAL_TOLERANCE = 1e-6
ROOT_TOLERANCE = 1e-10
NEWTON_SWITCH = 1e-3
MAX_ITERATIONS = 200

ERROR_SAMPLES = 2048
ERROR_REFINEMENTS = 20

CATENARY = "catenary"
TAUT = "taut"
VERTICAL = "vertical"

_UP = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class CatenaryCurve:
    anchor_a: Vec3
    anchor_b: Vec3
    arc_length: float
    catenary_param_a: float
    # (horizontal, vertical) position of the lowest point relative to anchor_a.
    vertex_offset: Tuple[float, float]
    plane_basis: Tuple[Vec3, Vec3]
    kind: str = CATENARY

    @property
    def taut(self) -> bool:
        return self.kind == TAUT

    @property
    def vertical(self) -> bool:
        return self.kind == VERTICAL

    @property
    def degenerate(self) -> bool:
        return self.kind != CATENARY

    @property
    def horizontal_span(self) -> float:
        return float(np.dot(self.anchor_b - self.anchor_a, self.plane_basis[0]))

    def _z_at_u(self, u):
        a = self.catenary_param_a
        uv = self.vertex_offset[0]
        return self.anchor_a[2] + a * (np.cosh((u - uv) / a) - math.cosh(uv / a))

    def plane_coords(self, s) -> Tuple[np.ndarray, np.ndarray]:
        """Horizontal and vertical in-plane offsets from ``anchor_a`` at arc length ``s``."""
        s = np.asarray(s, dtype=float)
        length = self.arc_length
        if self.kind == TAUT:
            frac = s / length if length > 0 else np.zeros_like(s)
            delta = self.anchor_b - self.anchor_a
            return frac * float(np.dot(delta, self.plane_basis[0])), frac * delta[2]
        if self.kind == VERTICAL:
            down = -self.vertex_offset[1]
            z = np.where(s <= down, -s, s - 2.0 * down)
            frac = s / length if length > 0 else np.zeros_like(s)
            return frac * self.horizontal_span, z
        a = self.catenary_param_a
        uv = self.vertex_offset[0]
        s0 = a * math.sinh(-uv / a)
        u = uv + a * np.arcsinh((s + s0) / a)
        return u, self._z_at_u(u) - self.anchor_a[2]

    def point_at(self, s) -> np.ndarray:
        """Point(s) on the curve at arc length ``s`` measured from ``anchor_a``."""
        u, z = self.plane_coords(s)
        e_h, e_z = self.plane_basis
        return (
            self.anchor_a
            + np.multiply.outer(u, e_h)
            + np.multiply.outer(z, e_z)
        )

    def midpoint_sag(self) -> float:
        """Vertical drop of the curve below the chord at the horizontal midpoint."""
        if self.kind == TAUT:
            return 0.0
        chord_mid = 0.5 * (self.anchor_a[2] + self.anchor_b[2])
        if self.kind == VERTICAL:
            return float(chord_mid - (self.anchor_a[2] + self.vertex_offset[1]))
        return float(chord_mid - self._z_at_u(0.5 * self.horizontal_span))

    def lowest_point(self) -> Vec3:
        if self.kind == TAUT:
            return self.anchor_a.copy() if self.anchor_a[2] <= self.anchor_b[2] else self.anchor_b.copy()
        u, dz = self.vertex_offset
        if self.kind == CATENARY and not 0.0 <= u <= self.horizontal_span:
            # The vertex lies outside the span; the lower anchor is the lowest point.
            return self.anchor_a.copy() if self.anchor_a[2] <= self.anchor_b[2] else self.anchor_b.copy()
        return self.anchor_a + u * self.plane_basis[0] + dz * _UP

    def anchor_forces(self, weight_per_length: float) -> Optional[Tuple[Vec3, Vec3]]:
        """Static forces the hanging cable exerts on ``anchor_a`` and ``anchor_b``.

        Returns ``None`` for a taut cable, whose tension is indeterminate.
        """
        w = weight_per_length
        if self.kind == TAUT:
            return None
        if self.kind == VERTICAL:
            low = self.anchor_a[2] + self.vertex_offset[1]
            return (
                -w * (self.anchor_a[2] - low) * _UP,
                -w * (self.anchor_b[2] - low) * _UP,
            )
        a = self.catenary_param_a
        uv = self.vertex_offset[0]
        e_h = self.plane_basis[0]
        horizontal = w * a
        slope_a = math.sinh(-uv / a)
        slope_b = math.sinh((self.horizontal_span - uv) / a)
        force_a = horizontal * e_h + horizontal * slope_a * _UP
        force_b = -horizontal * e_h - horizontal * slope_b * _UP
        return force_a, force_b


def _solve_shape_root(ratio: float) -> float:
    """Positive root of ``sinh(x) = ratio * x`` for ``ratio > 1``.

    Bisection narrows the bracket to ``NEWTON_SWITCH`` before handing over to a
    bracket-safeguarded Newton iteration.
    """

    def f(x):
        return math.sinh(x) - ratio * x

    lo, hi = 0.0, 1.0
    iterations = 0
    while f(hi) <= 0.0:
        lo, hi = hi, 2.0 * hi
        iterations += 1
        if iterations > MAX_ITERATIONS or hi > 700.0:
            raise NumericalFailure(f"could not bracket catenary root for ratio {ratio}")
    while hi - lo > NEWTON_SWITCH:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            hi = mid
        else:
            lo = mid
        iterations += 1
    x = 0.5 * (lo + hi)
    while iterations < MAX_ITERATIONS:
        iterations += 1
        fx = f(x)
        if fx > 0.0:
            hi = x
        else:
            lo = x
        step = fx / (math.cosh(x) - ratio)
        nxt = x - step
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - x) < ROOT_TOLERANCE:
            return nxt
        x = nxt
    raise NumericalFailure(f"catenary root did not converge in {MAX_ITERATIONS} iterations")


def solve_catenary(anchor_a: Vec3, anchor_b: Vec3, length: float) -> CatenaryCurve:
    """Hanging curve of arc length ``length`` through both anchors.

    Raises :class:`LengthTooShort` when the cable cannot span the anchors.
    """
    a_pt, b_pt = vec3(anchor_a), vec3(anchor_b)
    delta = b_pt - a_pt
    horizontal = float(math.hypot(delta[0], delta[1]))
    height = float(delta[2])
    chord = float(math.sqrt(horizontal * horizontal + height * height))
    if length < chord - SLACK_TOLERANCE:
        raise LengthTooShort(f"length {length} shorter than anchor distance {chord}")

    if horizontal >= VERTICAL_TOLERANCE:
        e_h = np.array([delta[0] / horizontal, delta[1] / horizontal, 0.0])
    else:
        e_h = np.array([1.0, 0.0, 0.0])
    basis = (e_h, _UP.copy())

    if horizontal < VERTICAL_TOLERANCE:
        low = 0.5 * (a_pt[2] + b_pt[2] - length)
        return CatenaryCurve(a_pt, b_pt, float(length), 0.0, (0.0, low - a_pt[2]), basis, VERTICAL)

    if length - chord <= SLACK_TOLERANCE:
        return CatenaryCurve(a_pt, b_pt, float(length), math.inf, (0.0, 0.0), basis, TAUT)

    ratio = math.sqrt(length * length - height * height) / horizontal
    x = _solve_shape_root(ratio)
    a = horizontal / (2.0 * x)
    u_vertex = 0.5 * horizontal - a * math.atanh(height / length)
    z_vertex = a * (1.0 - math.cosh(u_vertex / a))
    return CatenaryCurve(a_pt, b_pt, float(length), a, (u_vertex, z_vertex), basis, CATENARY)


def sample_curve(c: CatenaryCurve, n: int) -> List[Vec3]:
    """``n`` points equally spaced in arc length, anchors included exactly."""
    if n < 2:
        raise ValueError("n must be >= 2")
    pts = c.point_at(np.linspace(0.0, c.arc_length, n))
    pts[0] = c.anchor_a
    pts[-1] = c.anchor_b
    return list(pts)


def nearest_distances(nodes: np.ndarray, c: CatenaryCurve,
                      samples: int = ERROR_SAMPLES,
                      refinements: int = ERROR_REFINEMENTS) -> np.ndarray:
    """Distance from each node to the closest point of ``c``.

    Dense uniform sampling in arc length locates the nearest sample; a ternary
    search between its neighbours refines it.
    """
    nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
    e_h, e_z = c.plane_basis
    e_w = np.cross(e_z, e_h)
    rel = nodes - c.anchor_a
    nu, nz, nw = rel @ e_h, rel @ e_z, rel @ e_w
    length = c.arc_length
    grid = np.linspace(0.0, length, samples)
    gu, gz = c.plane_coords(grid)
    step = length / (samples - 1) if samples > 1 else 0.0

    def sq_dist(s, iu, iz, iw):
        u, z = c.plane_coords(s)
        return (iu - u) ** 2 + (iz - z) ** 2 + iw * iw

    out = np.empty(len(nodes))
    chunk = 256
    for start in range(0, len(nodes), chunk):
        sl = slice(start, start + chunk)
        iu, iz, iw = nu[sl], nz[sl], nw[sl]
        d2 = (iu[:, None] - gu[None, :]) ** 2 + (iz[:, None] - gz[None, :]) ** 2
        k = np.argmin(d2, axis=1)
        best = d2[np.arange(len(k)), k] + iw * iw
        lo = np.clip(grid[k] - step, 0.0, length)
        hi = np.clip(grid[k] + step, 0.0, length)
        for _ in range(refinements):
            m1 = lo + (hi - lo) / 3.0
            m2 = hi - (hi - lo) / 3.0
            left = sq_dist(m1, iu, iz, iw) < sq_dist(m2, iu, iz, iw)
            hi = np.where(left, m2, hi)
            lo = np.where(left, lo, m1)
        refined = sq_dist(0.5 * (lo + hi), iu, iz, iw)
        out[sl] = np.sqrt(np.minimum(best, refined))
    return out


def mean_catenary_error(nodes, c: CatenaryCurve) -> float:
    """Mean node-to-curve distance as a percentage of the curve length."""
    nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
    if len(nodes) == 0:
        raise ValueError("nodes must be non-empty")
    return 100.0 * float(np.mean(nearest_distances(nodes, c))) / c.arc_length
