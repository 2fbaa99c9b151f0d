"""Lumped-mass tether: a chain of point masses joined by spring-damper segments.

Node 0 is the root, attached at the winch exit; the last node is the tip,
attached at the UAV. The root segment may be shorter than a full element,
which is how the winch changes the deployed length continuously.

With ``inextensible_mode`` on, segment lengths are enforced after every step
by :func:`project_inextensible`, a Newton iteration on the chain's length
constraints. The constraint Jacobian of a chain couples only neighbouring
segments, so each Newton step is a symmetric tridiagonal solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import solveh_banded

from .catenary import solve_catenary
from .errors import InvalidParams
from .spatial import Vec3, vec3

MAX_ELEMENT_LENGTH = 0.2
# Coiled reserve from the default tether table: 123 elements of 0.15 m.
DEFAULT_RESERVE_LENGTH = 123 * 0.15
DEFAULT_GRAVITY = 9.81
COUNT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class TetherParams:
    element_length: float = 0.05
    node_radius: float = 0.004
    joint_radius: float = 0.009
    element_mass: float = 0.01
    damping: float = 0.05
    spring_stiffness: float = 0.01
    inextensible_mode: bool = True
    # Compliance (m/N) of the length constraints. Small but non-zero so a
    # tether pulled taut between two anchors yields a finite tension.
    axial_compliance: float = 1e-6

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not 0.0 < self.element_length <= MAX_ELEMENT_LENGTH:
            raise InvalidParams(
                f"element_length must be in (0, {MAX_ELEMENT_LENGTH}], got {self.element_length}"
            )
        for name in ("node_radius", "joint_radius", "element_mass", "damping", "spring_stiffness"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise InvalidParams(f"{name} must be a positive finite number, got {value}")
        if self.axial_compliance < 0:
            raise InvalidParams("axial_compliance must be >= 0")

    @property
    def weight_per_length(self) -> float:
        """Linear density in kg/m (multiply by g for N/m)."""
        return self.element_mass / self.element_length


def segment_count(deployed_length: float, element_length: float) -> int:
    """Number of segments needed for ``deployed_length``: a tolerant ceiling."""
    if deployed_length <= 0.0:
        return 0
    return max(1, math.ceil(deployed_length / element_length - COUNT_TOLERANCE))


def node_masses(n_nodes: int, element_mass: float) -> np.ndarray:
    """Each segment's mass is split evenly between its two end nodes."""
    if n_nodes <= 1:
        return np.full(max(n_nodes, 0), element_mass)
    m = np.full(n_nodes, element_mass)
    m[0] = m[-1] = 0.5 * element_mass
    return m


def rest_lengths_for(deployed_length: float, element_length: float) -> np.ndarray:
    n = segment_count(deployed_length, element_length)
    rest = np.full(n, element_length)
    if n:
        rest[0] = deployed_length - (n - 1) * element_length
    return rest


@dataclass
class TetherState:
    positions: np.ndarray
    velocities: np.ndarray
    rest_lengths: np.ndarray
    masses: np.ndarray
    root_anchored: bool = True
    tip_anchored: bool = True

    @property
    def n_nodes(self) -> int:
        return len(self.positions)

    @property
    def n_segments(self) -> int:
        return len(self.rest_lengths)

    @property
    def deployed_length(self) -> float:
        return float(np.sum(self.rest_lengths))

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.masses))

    def inverse_masses(self) -> np.ndarray:
        w = 1.0 / self.masses
        if self.n_nodes:
            if self.root_anchored:
                w[0] = 0.0
            if self.tip_anchored:
                w[-1] = 0.0
        return w

    def free_mask(self) -> np.ndarray:
        return self.inverse_masses() > 0.0

    def kinetic_energy(self) -> float:
        mask = self.free_mask()
        v = self.velocities[mask]
        return 0.5 * float(np.sum(self.masses[mask] * np.sum(v * v, axis=1)))

    def segment_lengths(self) -> np.ndarray:
        d = np.diff(self.positions, axis=0)
        return np.sqrt(np.sum(d * d, axis=1))

    def copy(self) -> "TetherState":
        return TetherState(
            self.positions.copy(), self.velocities.copy(), self.rest_lengths.copy(),
            self.masses.copy(), self.root_anchored, self.tip_anchored,
        )


def build_tether(params: TetherParams, root: Vec3, tip: Vec3, deployed_length: float) -> TetherState:
    """Chain of ``deployed_length`` laid along the analytic hanging curve.

    When the length cannot span the anchors the nodes are spread along the
    straight segment instead.
    """
    params.validate()
    if deployed_length < 0:
        raise InvalidParams("deployed_length must be >= 0")
    root, tip = vec3(root), vec3(tip)
    rest = rest_lengths_for(deployed_length, params.element_length)
    n_nodes = len(rest) + 1
    masses = node_masses(n_nodes, params.element_mass)
    if len(rest) == 0:
        pos = root[None, :].copy()
        return TetherState(pos, np.zeros_like(pos), rest, masses)

    arc = np.concatenate([[0.0], np.cumsum(rest)])
    arc[-1] = deployed_length
    span = float(np.linalg.norm(tip - root))
    if deployed_length <= span:
        frac = arc / deployed_length
        pos = root + np.outer(frac, tip - root)
    else:
        curve = solve_catenary(root, tip, deployed_length)
        pos = curve.point_at(arc)
    pos[0], pos[-1] = root, tip
    return TetherState(pos, np.zeros_like(pos), rest, masses)


def segment_forces(s: TetherState, params: TetherParams) -> np.ndarray:
    """Spring plus damping force of each segment, acting on its root-side node.

    The spring acts along the segment. Damping opposes the full relative
    velocity of the two nodes, which also damps bending of the chain the way
    joint damping would. The tip-side node receives the negated force.
    """
    x = s.positions
    d = x[1:] - x[:-1]
    length = np.sqrt(np.einsum("ij,ij->i", d, d))
    safe = np.where(length > 1e-12, length, 1.0)
    n = d / safe[:, None]
    n[length <= 1e-12] = 0.0
    v = s.velocities
    spring = params.spring_stiffness * (length - s.rest_lengths)
    return spring[:, None] * n + params.damping * (v[1:] - v[:-1])


def accumulate_forces(
    s: TetherState,
    params: TetherParams,
    gravity: float = DEFAULT_GRAVITY,
    contacts: Iterable[Tuple[int, Vec3]] = (),
) -> np.ndarray:
    """Net external plus internal force on every node, shape ``(N, 3)``.

    ``contacts`` holds ``(node_index, force)`` pairs computed by the caller,
    or a dense ``(N, 3)`` array of per-node contact forces.
    """
    forces = np.zeros_like(s.positions)
    forces[:, 2] -= s.masses * gravity
    if s.n_segments:
        f = segment_forces(s, params)
        forces[:-1] += f
        forces[1:] -= f
    if isinstance(contacts, np.ndarray):
        forces += contacts
    else:
        for idx, f in contacts:
            forces[idx] += f
    return forces


def _constraint_frame(x: np.ndarray, rest: np.ndarray):
    d = x[1:] - x[:-1]
    length = np.sqrt(np.einsum("ij,ij->i", d, d))
    small = length <= 1e-12
    n = d / np.where(small, 1.0, length)[:, None]
    if np.any(small):
        n[small] = (0.0, 0.0, 1.0)
    return n, length - rest


def project_inextensible(
    s: TetherState,
    iterations: int = 4,
    compliance: float = 0.0,
    dt: Optional[float] = None,
    tolerance: float = 1e-12,
) -> np.ndarray:
    """Pull segment lengths back to their rest lengths, in place.

    Anchored end nodes are held fixed. ``compliance`` (m/N) with the step
    ``dt`` softens the constraints the way a very stiff spring would; with
    zero compliance a tiny regularisation keeps over-constrained (taut)
    chains solvable.

    Returns the accumulated position-level impulse on every node (kg m), which
    is zero-sum over the chain. Dividing by ``dt`` gives the constraint impulse.
    """
    m = s.n_segments
    impulse = np.zeros_like(s.positions)
    if m == 0:
        return impulse
    w = s.inverse_masses()
    active = (w[:-1] + w[1:]) > 0.0
    alpha = compliance / (dt * dt) if (compliance > 0 and dt) else 0.0
    reg = alpha if alpha > 0 else 1e-9 * float(np.max(w))
    lam = np.zeros(m)
    x = s.positions
    ab = np.empty((2, m))
    for _ in range(iterations):
        n, c = _constraint_frame(x, s.rest_lengths)
        rhs = -c - alpha * lam
        rhs[~active] = 0.0
        if np.max(np.abs(rhs)) <= tolerance:
            break
        diag = w[:-1] + w[1:] + reg
        diag[~active] = 1.0
        if m == 1:
            dlam = rhs / diag
        else:
            ab[1] = diag
            ab[0, 0] = 0.0
            ab[0, 1:] = -w[1:-1] * np.einsum("ij,ij->i", n[:-1], n[1:])
            dlam = solveh_banded(ab, rhs, lower=False, check_finite=False)
        lam += dlam
        step = n * dlam[:, None]
        delta = np.zeros_like(x)
        delta[:-1] -= step
        delta[1:] += step
        impulse += delta
        x += w[:, None] * delta
    return impulse


def anchor_impulse(
    s: TetherState, index: int, velocity_before: Vec3, forces: np.ndarray, impulse: np.ndarray, dt: float
) -> Vec3:
    """Impulse (N s) an anchor delivered to node ``index`` during the last step.

    It is what remains of the node's momentum change once the node's own
    forces and the projection's constraint impulse are accounted for.
    ``impulse`` is the position-level value returned by
    :func:`project_inextensible`.
    """
    dv = s.velocities[index] - np.asarray(velocity_before)
    return s.masses[index] * dv - dt * forces[index] - impulse[index] / dt


def settle(
    s: TetherState,
    params: TetherParams,
    gravity: float = DEFAULT_GRAVITY,
    dt: float = 1e-3,
    duration: float = 60.0,
    energy_threshold: float = 1e-6,
    iterations: int = 4,
    min_duration: float = 0.0,
) -> float:
    """Relax a tether with fixed anchors until its kinetic energy drops below threshold.

    Returns the simulated time spent. The state is modified in place.
    """
    steps = int(round(duration / dt))
    min_steps = int(round(min_duration / dt))
    for k in range(1, steps + 1):
        free_step(s, params, gravity, dt, iterations)
        if k >= min_steps and s.kinetic_energy() < energy_threshold:
            return k * dt
    return steps * dt


def free_step(
    s: TetherState,
    params: TetherParams,
    gravity: float,
    dt: float,
    iterations: int = 4,
    contacts: Sequence[Tuple[int, Vec3]] = (),
) -> Tuple[np.ndarray, np.ndarray]:
    """One semi-implicit Euler step with the anchored nodes left where they are.

    Returns the forces used and the projection impulse (position level).
    """
    forces = accumulate_forces(s, params, gravity, contacts)
    mask = s.free_mask()
    s.velocities[mask] += dt * forces[mask] / s.masses[mask, None]
    s.positions[mask] += dt * s.velocities[mask]
    impulse = np.zeros_like(s.positions)
    if params.inextensible_mode and s.n_segments:
        before = s.positions.copy()
        impulse = project_inextensible(s, iterations, params.axial_compliance, dt)
        s.velocities[mask] += (s.positions[mask] - before[mask]) / dt
    return forces, impulse
