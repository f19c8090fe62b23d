"""Rigid-body simulation of jointed segments.

Six joint types from a fixed taxonomy constrain segment pairs; the solver
is semi-implicit Euler with sequential impulses (10 iterations, Baumgarte
positional feedback) plus implicit joint damping from the resistance
preset. Touch input is a fingertip collision sphere that delivers a
velocity-matched impulse at the deepest contact point. Deterministic for
identical inputs: fixed iteration order, no threading.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    CyclicBaseChainError,
    DuplicateJointError,
    NoSharedInterfaceError,
    NumericalBlowupError,
    UnknownJointError,
    UnknownSegmentError,
)
from .mesh import TriMesh

logger = logging.getLogger(__name__)

DEFAULT_DENSITY = 500.0          # kg/m^3, toy-like solids
DEFAULT_DT = 1.0 / 120.0
SOLVER_ITERATIONS = 10
BAUMGARTE_BETA = 0.2
BLOWUP_SPEED = 1e6               # m/s or rad/s
TOUCH_RADIUS = 0.01              # m, fingertip sphere
ANCHOR_TOLERANCE = 0.01          # m, anchor must sit near both segments

RESISTANCE_PRESETS = {"low": 0.02, "medium": 0.2, "high": 2.0}

_GRAVITY_DEFAULT = (0.0, -9.81, 0.0)


# ---------------------------------------------------------------------------
# quaternions (w, x, y, z)


def quat_identity() -> np.ndarray:
    return np.array([1.0, 0.0, 0.0, 0.0])


def quat_mul(a, b) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conj(q) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_normalize(q) -> np.ndarray:
    return q / np.linalg.norm(q)


def quat_from_axis_angle(axis, angle) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    half = angle / 2.0
    return np.concatenate([[np.cos(half)], np.sin(half) * axis])


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_rotate(q, v) -> np.ndarray:
    return quat_to_matrix(q) @ np.asarray(v, dtype=np.float64)


def quat_to_rotvec(q) -> np.ndarray:
    q = quat_normalize(q)
    if q[0] < 0:
        q = -q  # shortest arc
    vec = q[1:]
    sin_half = np.linalg.norm(vec)
    if sin_half < 1e-12:
        return 2.0 * vec
    angle = 2.0 * np.arctan2(sin_half, q[0])
    return vec / sin_half * angle


def _cross3(a, b) -> np.ndarray:
    ax, ay, az = a.tolist()
    bx, by, bz = b.tolist()
    return np.array([ay * bz - az * by, az * bx - ax * bz, ax * by - ay * bx])


def _skew(v) -> np.ndarray:
    x, y, z = v
    return np.array([[0, -z, y], [z, 0, -x], [-y, x, 0]], dtype=np.float64)


# ---------------------------------------------------------------------------
# joint taxonomy


class JointType(Enum):
    PIVOT = "pivot"
    BALL_AND_SOCKET = "ball_and_socket"
    HINGE = "hinge"
    CONDYLOID = "condyloid"
    PLANE = "plane"
    SADDLE = "saddle"

    @property
    def free_rot_axes(self) -> tuple[int, ...]:
        """Indices into the joint frame (a, b, c) with free rotation."""
        return {
            JointType.PIVOT: (0,),
            JointType.BALL_AND_SOCKET: (0, 1, 2),
            JointType.HINGE: (0,),
            JointType.CONDYLOID: (0, 1),
            JointType.PLANE: (),
            JointType.SADDLE: (0, 1),
        }[self]

    @property
    def free_trans_axes(self) -> tuple[int, ...]:
        """Free translation axes; only the gliding plane joint has any."""
        return (0, 1) if self is JointType.PLANE else ()

    @property
    def default_limits(self) -> dict[int, tuple[float, float]]:
        """Angle limits (rad) per free rotation axis; a saddle sweeps
        wider than a condyloid."""
        if self is JointType.CONDYLOID:
            half = np.pi / 2
            return {0: (-half, half), 1: (-half, half)}
        if self is JointType.SADDLE:
            wide = 2 * np.pi / 3
            return {0: (-wide, wide), 1: (-wide, wide)}
        return {}


@dataclass(frozen=True)
class JointSpec:
    """Binds ``movable`` to ``base`` at ``anchor`` with the orthonormal
    frame ``axes`` (rows a, b, c); resistance maps to a damping preset."""

    joint_id: str
    joint_type: JointType
    base: str
    movable: str
    anchor: np.ndarray
    axes: np.ndarray
    resistance: str = "medium"
    limits: dict[int, tuple[float, float]] | None = None

    def __post_init__(self):
        object.__setattr__(self, "anchor", np.asarray(self.anchor, dtype=np.float64))
        axes = np.asarray(self.axes, dtype=np.float64)
        if axes.shape != (3, 3):
            raise ValueError("axes must be a 3x3 matrix (rows a, b, c)")
        if np.abs(axes @ axes.T - np.eye(3)).max() > 1e-9:
            raise ValueError("joint axes must be orthonormal within 1e-9")
        object.__setattr__(self, "axes", axes)
        if self.base == self.movable:
            raise ValueError("base and movable must be different segments")
        if self.resistance not in RESISTANCE_PRESETS:
            raise ValueError(f"unknown resistance preset {self.resistance!r}")

    @property
    def damping(self) -> float:
        return RESISTANCE_PRESETS[self.resistance]

    def effective_limits(self) -> dict[int, tuple[float, float]]:
        limits = dict(self.joint_type.default_limits)
        if self.limits:
            limits.update({int(k): tuple(v) for k, v in self.limits.items()})
        return limits


def frame_for_type(joint_type: JointType, axes: np.ndarray) -> np.ndarray:
    """Reorder an inferred interface frame for a joint type: a pivot twists
    about the interface normal (c), a hinge flexes about the in-plane major
    axis (a), so the pivot frame is the cyclic permutation (c, a, b)."""
    if joint_type is JointType.PIVOT:
        return np.array([axes[2], axes[0], axes[1]])
    return np.asarray(axes, dtype=np.float64)


@dataclass(frozen=True)
class TouchEvent:
    """Fingertip collision sphere sample."""

    time: float
    center: np.ndarray
    velocity: np.ndarray
    radius: float = TOUCH_RADIUS

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=np.float64))
        if self.radius <= 0:
            raise ValueError("touch sphere radius must be positive")


# ---------------------------------------------------------------------------
# mass properties

_TET_COVARIANCE = np.full((3, 3), 1.0 / 120.0) + np.diag([1.0 / 120.0] * 3)


def mass_properties(mesh: TriMesh, density: float = DEFAULT_DENSITY):
    """(mass, center of mass, inertia tensor about the com).

    Exact polyhedral integrals for watertight meshes; open meshes fall back
    to their bounding box (logged) so physics stays usable on raw
    auto-segmented parts.
    """
    tri = mesh.vertices[mesh.triangles]
    p1, p2, p3 = tri[:, 0], tri[:, 1], tri[:, 2]
    dets = np.einsum("ij,ij->i", p1, np.cross(p2, p3))
    volume = dets.sum() / 6.0
    usable = mesh.watertight and abs(volume) > 1e-12
    if usable:
        sign = 1.0 if volume > 0 else -1.0
        volume = abs(volume)
        com = sign * (dets[:, None] * (p1 + p2 + p3)).sum(axis=0) / (24.0 * volume)
        cov = np.zeros((3, 3))
        for k in range(len(tri)):
            a = tri[k].T  # columns p1, p2, p3
            cov += dets[k] * (a @ _TET_COVARIANCE @ a.T)
        cov *= sign * density
        mass = density * volume
        inertia_origin = np.trace(cov) * np.eye(3) - cov
        shift = mass * ((com @ com) * np.eye(3) - np.outer(com, com))
        inertia = inertia_origin - shift
        if np.linalg.eigvalsh(inertia).min() > 0:
            return mass, com, inertia

    lo, hi = mesh.bbox
    size = np.maximum(hi - lo, 1e-6)
    logger.warning("mass fallback to bounding box (watertight=%s)", mesh.watertight)
    mass = density * float(size.prod())
    com = (lo + hi) / 2.0
    sx, sy, sz = size
    inertia = mass / 12.0 * np.diag([sy * sy + sz * sz, sx * sx + sz * sz, sx * sx + sy * sy])
    return mass, com, inertia


# ---------------------------------------------------------------------------
# simulation state


@dataclass
class BodyState:
    segment_id: str
    mass: float
    inv_mass: float
    inertia_body: np.ndarray
    inv_inertia_body: np.ndarray
    com_rest: np.ndarray           # rest-pose center of mass (scene frame)
    position: np.ndarray           # current com position
    orientation: np.ndarray        # quaternion (w, x, y, z)
    velocity: np.ndarray
    angular_velocity: np.ndarray
    kinematic: bool

    def copy(self) -> "BodyState":
        return BodyState(
            segment_id=self.segment_id,
            mass=self.mass,
            inv_mass=self.inv_mass,
            inertia_body=self.inertia_body,
            inv_inertia_body=self.inv_inertia_body,
            com_rest=self.com_rest,
            position=self.position.copy(),
            orientation=self.orientation.copy(),
            velocity=self.velocity.copy(),
            angular_velocity=self.angular_velocity.copy(),
            kinematic=self.kinematic,
        )

    def rotation(self) -> np.ndarray:
        return quat_to_matrix(self.orientation)

    def inv_inertia_world(self) -> np.ndarray:
        if self.kinematic:
            return np.zeros((3, 3))
        r = self.rotation()
        return r @ self.inv_inertia_body @ r.T

    def world_point(self, rest_point) -> np.ndarray:
        """Map a rest-pose scene point riding on this body to world."""
        return self.position + self.rotation() @ (rest_point - self.com_rest)

    def point_velocity(self, world_point) -> np.ndarray:
        return self.velocity + _cross3(self.angular_velocity, world_point - self.position)


@dataclass
class SimState:
    bodies: dict[str, BodyState]
    gravity: np.ndarray = field(default_factory=lambda: np.array(_GRAVITY_DEFAULT))
    time: float = 0.0
    step_index: int = 0
    pending_touches: tuple[TouchEvent, ...] = ()

    def copy(self) -> "SimState":
        return SimState(
            bodies={k: b.copy() for k, b in self.bodies.items()},
            gravity=self.gravity.copy(),
            time=self.time,
            step_index=self.step_index,
            pending_touches=self.pending_touches,
        )

    def kinetic_energy(self) -> float:
        total = 0.0
        for body in self.bodies.values():
            if body.kinematic:
                continue
            r = body.rotation()
            inertia_world = r @ body.inertia_body @ r.T
            total += 0.5 * body.mass * float(body.velocity @ body.velocity)
            total += 0.5 * float(body.angular_velocity @ inertia_world @ body.angular_velocity)
        return total


def movable_segments(scene) -> set[str]:
    return {j.movable for j in scene.joints}


def initial_state(scene, density: float = DEFAULT_DENSITY) -> SimState:
    """Bodies at rest in the authored pose; a segment is kinematic unless
    it is the movable side of some joint."""
    movable = movable_segments(scene)
    bodies: dict[str, BodyState] = {}
    for seg in scene.segments:
        mass, com, inertia = mass_properties(seg.mesh, density)
        kinematic = seg.segment_id not in movable
        bodies[seg.segment_id] = BodyState(
            segment_id=seg.segment_id,
            mass=mass,
            inv_mass=0.0 if kinematic else 1.0 / mass,
            inertia_body=inertia,
            inv_inertia_body=np.linalg.inv(inertia),
            com_rest=com,
            position=com.copy(),
            orientation=quat_identity(),
            velocity=np.zeros(3),
            angular_velocity=np.zeros(3),
            kinematic=kinematic,
        )
    gravity = np.asarray(scene.sim.gravity, dtype=np.float64)
    return SimState(bodies=bodies, gravity=gravity)


# ---------------------------------------------------------------------------
# joint attachment / frame inference


def _closest_surface_distance(mesh: TriMesh, point) -> float:
    cp = closest_point_on_mesh(mesh.vertices, mesh.triangles, np.asarray(point, dtype=np.float64))
    return float(np.linalg.norm(cp - point))


def attach_joint(scene, spec: JointSpec):
    """Validated scene copy with the joint added. The movable segment
    becomes dynamic; bases stay kinematic unless they are movable in some
    other joint (chains allowed, cycles rejected)."""
    ids = {seg.segment_id for seg in scene.segments}
    for sid in (spec.base, spec.movable):
        if sid not in ids:
            raise UnknownSegmentError(f"unknown segment {sid!r}")
    for j in scene.joints:
        if j.joint_id == spec.joint_id:
            raise DuplicateJointError(f"joint id {spec.joint_id!r} already used")
        if (
            j.base == spec.base
            and j.movable == spec.movable
            and np.linalg.norm(j.anchor - spec.anchor) < 1e-9
        ):
            raise DuplicateJointError(
                f"joint between {spec.base!r} and {spec.movable!r} at the same anchor"
            )

    # movable -> base support edges must stay acyclic
    edges = {(j.movable, j.base) for j in scene.joints} | {(spec.movable, spec.base)}
    succ: dict[str, set[str]] = {}
    for m, b in edges:
        succ.setdefault(m, set()).add(b)
    state: dict[str, int] = {}

    def dfs(node):
        state[node] = 1
        for nxt in succ.get(node, ()):
            if state.get(nxt) == 1:
                raise CyclicBaseChainError(f"base chain cycle through {nxt!r}")
            if state.get(nxt) is None:
                dfs(nxt)
        state[node] = 2

    for node in sorted(succ):
        if state.get(node) is None:
            dfs(node)

    for sid in (spec.base, spec.movable):
        seg = next(s for s in scene.segments if s.segment_id == sid)
        gap = _closest_surface_distance(seg.mesh, spec.anchor)
        if gap > ANCHOR_TOLERANCE:
            logger.warning(
                "joint %s anchor is %.3f m from segment %s surface", spec.joint_id, gap, sid
            )
    return dataclasses.replace(scene, joints=scene.joints + (spec,))


def infer_joint_frame(base: TriMesh, movable: TriMesh,
                      tolerance: float = ANCHOR_TOLERANCE):
    """Default joint placement from the shared cut interface: anchor at the
    interface centroid, c along the interface normal (pointing at the
    movable segment), a along the cross-section's major principal axis.
    """
    d2 = ((base.vertices[:, None, :] - movable.vertices[None, :, :]) ** 2).sum(axis=2)
    pairs = np.nonzero(d2 <= tolerance * tolerance)
    if len(pairs[0]) < 3:
        raise NoSharedInterfaceError(
            f"segments share no boundary within {tolerance} m"
        )
    interface = (base.vertices[pairs[0]] + movable.vertices[pairs[1]]) / 2.0
    interface = np.unique(np.round(interface, 12), axis=0)
    anchor = interface.mean(axis=0)

    centered = interface - anchor
    cov = centered.T @ centered
    evals, evecs = np.linalg.eigh(cov)       # ascending
    c = evecs[:, 0]                          # smallest spread: interface normal
    a = evecs[:, 2]                          # largest spread: major axis
    to_movable = movable.vertices.mean(axis=0) - base.vertices.mean(axis=0)
    if c @ to_movable < 0:
        c = -c
    if abs(a[np.argmax(np.abs(a))]) < 0:     # pragma: no cover - sign fixed below
        a = -a
    if a[np.argmax(np.abs(a))] < 0:
        a = -a                               # deterministic sign convention
    b = np.cross(c, a)
    b /= np.linalg.norm(b)
    a = np.cross(b, c)
    return anchor, np.array([a, b, c])


# ---------------------------------------------------------------------------
# touch collision


def closest_point_on_mesh(vertices, triangles, point) -> np.ndarray:
    """Closest point on a triangle soup to ``point`` (vectorized barycentric
    clamping over all triangles)."""
    tri = vertices[triangles]
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    ab, ac = b - a, c - a
    ap = point - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = point - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = point - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)

    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2
    denom = va + vb + vc
    denom = np.where(np.abs(denom) < 1e-30, 1.0, denom)
    v = vb / denom
    w = vc / denom
    candidates = a + v[:, None] * ab + w[:, None] * ac

    # vertex regions
    candidates = np.where(((d1 <= 0) & (d2 <= 0))[:, None], a, candidates)
    candidates = np.where(((d3 >= 0) & (d4 <= d3))[:, None], b, candidates)
    candidates = np.where(((d6 >= 0) & (d5 <= d6))[:, None], c, candidates)
    # edge AB
    on_ab = (d1 >= 0) & (d3 <= 0) & (vc <= 0)
    t_ab = np.where(np.abs(d1 - d3) < 1e-30, 0.0, d1 / np.where(d1 - d3 == 0, 1, d1 - d3))
    candidates = np.where(on_ab[:, None], a + np.clip(t_ab, 0, 1)[:, None] * ab, candidates)
    # edge AC
    on_ac = (d2 >= 0) & (d6 <= 0) & (vb <= 0)
    t_ac = np.where(np.abs(d2 - d6) < 1e-30, 0.0, d2 / np.where(d2 - d6 == 0, 1, d2 - d6))
    candidates = np.where(on_ac[:, None], a + np.clip(t_ac, 0, 1)[:, None] * ac, candidates)
    # edge BC
    on_bc = ((d4 - d3) >= 0) & ((d5 - d6) >= 0) & (va <= 0)
    denom_bc = (d4 - d3) + (d5 - d6)
    t_bc = np.where(np.abs(denom_bc) < 1e-30, 0.0, (d4 - d3) / np.where(denom_bc == 0, 1, denom_bc))
    candidates = np.where(on_bc[:, None], b + np.clip(t_bc, 0, 1)[:, None] * (c - b), candidates)

    dists = ((candidates - point) ** 2).sum(axis=1)
    return candidates[int(np.argmin(dists))]


def _segment_world_vertices(body: BodyState, mesh: TriMesh) -> np.ndarray:
    return (mesh.vertices - body.com_rest) @ body.rotation().T + body.position


def _apply_touch(bodies, scene, touch: TouchEvent) -> None:
    for seg in scene.segments:
        body = bodies[seg.segment_id]
        if body.kinematic:
            continue
        world = _segment_world_vertices(body, seg.mesh)
        lo, hi = world.min(axis=0), world.max(axis=0)
        if ((touch.center < lo - touch.radius) | (touch.center > hi + touch.radius)).any():
            continue
        cp = closest_point_on_mesh(world, seg.mesh.triangles, touch.center)
        gap = np.linalg.norm(cp - touch.center)
        if gap >= touch.radius:
            continue
        if gap < 1e-12:
            speed = np.linalg.norm(touch.velocity)
            if speed < 1e-12:
                continue
            normal = touch.velocity / speed
        else:
            normal = (cp - touch.center) / gap
        rel = float((touch.velocity - body.point_velocity(cp)) @ normal)
        if rel <= 0:
            continue  # separating: no poke
        r = cp - body.position
        rn = _cross3(r, normal)
        k = body.inv_mass + float(rn @ body.inv_inertia_world() @ rn)
        impulse = (rel / k) * normal
        body.velocity = body.velocity + body.inv_mass * impulse
        body.angular_velocity = body.angular_velocity + body.inv_inertia_world() @ _cross3(r, impulse)


# ---------------------------------------------------------------------------
# constraint solving


@dataclass
class _JointWork:
    """Per-step constraint data; everything position-dependent (anchors,
    axes, effective masses, Baumgarte biases) is frozen before the velocity
    iterations, which then run on cheap vector math only."""

    spec: JointSpec
    body_a: BodyState
    body_b: BodyState
    ra: np.ndarray
    rb: np.ndarray
    inv_ia: np.ndarray
    inv_ib: np.ndarray
    axes: np.ndarray                      # world joint frame rows
    # translational block: either full 3x3 (K inverse) or plane scalar
    k_inv: np.ndarray | None
    trans_bias: np.ndarray | None
    plane_n: np.ndarray | None
    plane_k: float
    plane_bias: float
    # locked rotation axes: (axis, 1/k, bias)
    rot_rows: list[tuple[np.ndarray, float, float]]
    # active limit rows: (axis, 1/k, bias, clamp_sign)
    limit_rows: list[tuple[np.ndarray, float, float, float]]
    limit_acc: list[float]

    def apply_point_impulse(self, impulse) -> None:
        b = self.body_b
        if not b.kinematic:
            b.velocity = b.velocity + b.inv_mass * impulse
            b.angular_velocity = b.angular_velocity + self.inv_ib @ _cross3(self.rb, impulse)
        a = self.body_a
        if not a.kinematic:
            a.velocity = a.velocity - a.inv_mass * impulse
            a.angular_velocity = a.angular_velocity - self.inv_ia @ _cross3(self.ra, impulse)

    def apply_angular_impulse(self, impulse) -> None:
        b = self.body_b
        if not b.kinematic:
            b.angular_velocity = b.angular_velocity + self.inv_ib @ impulse
        a = self.body_a
        if not a.kinematic:
            a.angular_velocity = a.angular_velocity - self.inv_ia @ impulse


def _joint_work(scene, bodies, dt: float) -> list[_JointWork]:
    beta = BAUMGARTE_BETA / dt
    work = []
    for spec in scene.joints:
        a = bodies[spec.base]
        b = bodies[spec.movable]
        rot_a = a.rotation()
        rot_b = b.rotation()
        inv_ia = np.zeros((3, 3)) if a.kinematic else rot_a @ a.inv_inertia_body @ rot_a.T
        inv_ib = np.zeros((3, 3)) if b.kinematic else rot_b @ b.inv_inertia_body @ rot_b.T
        pa = a.position + rot_a @ (spec.anchor - a.com_rest)
        pb = b.position + rot_b @ (spec.anchor - b.com_rest)
        ra, rb = pa - a.position, pb - b.position
        axes = (rot_a @ spec.axes.T).T
        q_rel = quat_mul(quat_conj(a.orientation), b.orientation)
        phi = rot_a @ quat_to_rotvec(q_rel)

        k_inv = trans_bias = plane_n = None
        plane_k = plane_bias = 0.0
        if spec.joint_type is JointType.PLANE:
            n = axes[2]
            ran, rbn = _cross3(ra, n), _cross3(rb, n)
            k = a.inv_mass + b.inv_mass + float(ran @ inv_ia @ ran) + float(rbn @ inv_ib @ rbn)
            plane_n, plane_k = n, (k if k > 0 else 1.0)
            plane_bias = beta * float((pb - pa) @ n)
        else:
            k = (a.inv_mass + b.inv_mass) * np.eye(3)
            k -= _skew(ra) @ inv_ia @ _skew(ra)
            k -= _skew(rb) @ inv_ib @ _skew(rb)
            k_inv = np.linalg.inv(k)
            trans_bias = beta * (pb - pa)

        rot_rows = []
        free = spec.joint_type.free_rot_axes
        for i in range(3):
            if i in free:
                continue
            u = axes[i]
            ku = float(u @ (inv_ia + inv_ib) @ u)
            if ku > 0:
                rot_rows.append((u, 1.0 / ku, beta * float(phi @ u)))

        limit_rows = []
        for i, (lo, hi) in spec.effective_limits().items():
            if i not in free:
                continue
            u = axes[i]
            theta = float(phi @ u)
            violation = theta - hi if theta > hi else (theta - lo if theta < lo else 0.0)
            if violation == 0.0:
                continue
            ku = float(u @ (inv_ia + inv_ib) @ u)
            if ku <= 0:
                continue
            clamp_sign = -1.0 if violation > 0 else 1.0
            limit_rows.append((u, 1.0 / ku, beta * violation, clamp_sign))

        work.append(
            _JointWork(
                spec=spec, body_a=a, body_b=b, ra=ra, rb=rb,
                inv_ia=inv_ia, inv_ib=inv_ib, axes=axes,
                k_inv=k_inv, trans_bias=trans_bias,
                plane_n=plane_n, plane_k=plane_k, plane_bias=plane_bias,
                rot_rows=rot_rows, limit_rows=limit_rows,
                limit_acc=[0.0] * len(limit_rows),
            )
        )
    return work


def _solve_joint(work: _JointWork) -> None:
    a, b = work.body_a, work.body_b

    if work.plane_n is not None:
        n = work.plane_n
        rel = (
            b.velocity + _cross3(b.angular_velocity, work.rb)
            - a.velocity - _cross3(a.angular_velocity, work.ra)
        ) @ n
        lam = -(rel + work.plane_bias) / work.plane_k
        work.apply_point_impulse(lam * n)
    else:
        rel = (
            b.velocity + _cross3(b.angular_velocity, work.rb)
            - a.velocity - _cross3(a.angular_velocity, work.ra)
        )
        work.apply_point_impulse(work.k_inv @ -(rel + work.trans_bias))

    for u, k_inv, bias in work.rot_rows:
        w_rel = float((b.angular_velocity - a.angular_velocity) @ u)
        work.apply_angular_impulse((-(w_rel + bias) * k_inv) * u)

    for row, (u, k_inv, bias, clamp_sign) in enumerate(work.limit_rows):
        w_rel = float((b.angular_velocity - a.angular_velocity) @ u)
        raw = -(w_rel + bias) * k_inv
        prev = work.limit_acc[row]
        total = prev + raw
        total = min(total, 0.0) if clamp_sign < 0 else max(total, 0.0)
        work.limit_acc[row] = total
        work.apply_angular_impulse((total - prev) * u)


def _apply_joint_damping(work: _JointWork, dt: float) -> None:
    """Implicit resistance damping on the free DOFs (unconditionally
    stable for any preset and timestep)."""
    a, b = work.body_a, work.body_b
    d = work.spec.damping
    if d <= 0:
        return
    free = work.spec.joint_type.free_rot_axes
    if free:
        u = work.axes[list(free)].T               # 3 x m
        k_rot = work.inv_ia + work.inv_ib
        w_rel = b.angular_velocity - a.angular_velocity
        lhs = np.eye(len(free)) + d * dt * (u.T @ k_rot @ u)
        lam = np.linalg.solve(lhs, -d * dt * (u.T @ w_rel))
        work.apply_angular_impulse(u @ lam)
    if work.spec.joint_type is JointType.PLANE:
        u = work.axes[:2].T
        v_rel = (
            b.velocity + _cross3(b.angular_velocity, work.rb)
            - a.velocity - _cross3(a.angular_velocity, work.ra)
        )
        k = (a.inv_mass + b.inv_mass) * np.eye(3)
        k -= _skew(work.ra) @ work.inv_ia @ _skew(work.ra)
        k -= _skew(work.rb) @ work.inv_ib @ _skew(work.rb)
        lhs = np.eye(2) + d * dt * (u.T @ k @ u)
        lam = np.linalg.solve(lhs, -d * dt * (u.T @ v_rel))
        work.apply_point_impulse(u @ lam)


def _ground_contacts(bodies, scene, dt) -> None:
    beta = BAUMGARTE_BETA / dt
    for seg in scene.segments:
        body = bodies[seg.segment_id]
        if body.kinematic:
            continue
        world = _segment_world_vertices(body, seg.mesh)
        deepest = int(np.argmin(world[:, 1]))
        depth = -float(world[deepest, 1])
        if depth <= 0:
            continue
        cp = world[deepest]
        normal = np.array([0.0, 1.0, 0.0])
        v_n = float(body.point_velocity(cp) @ normal)
        r = cp - body.position
        rn = _cross3(r, normal)
        inv_iw = body.inv_inertia_world()
        k = body.inv_mass + float(rn @ inv_iw @ rn)
        lam = -(v_n - beta * depth) / k
        if lam <= 0:
            continue
        impulse = lam * normal
        body.velocity = body.velocity + body.inv_mass * impulse
        body.angular_velocity = body.angular_velocity + inv_iw @ _cross3(r, impulse)


def step(state: SimState, scene, dt: float = DEFAULT_DT) -> SimState:
    """Advance one fixed step: gravity, touch impulses, implicit joint
    damping, sequential-impulse joint solve, integrate, normalize."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    out = state.copy()
    bodies = out.bodies

    gdt = out.gravity * dt
    for body in bodies.values():
        if not body.kinematic:
            body.velocity = body.velocity + gdt

    t_end = out.time + dt
    due = [t for t in out.pending_touches if t.time < t_end]
    remaining = tuple(t for t in out.pending_touches if t.time >= t_end)
    for touch in due:
        _apply_touch(bodies, scene, touch)

    work = _joint_work(scene, bodies, dt)
    for w in work:
        _apply_joint_damping(w, dt)
    ground = getattr(scene.sim, "ground_plane", False)
    for _ in range(SOLVER_ITERATIONS):
        for w in work:
            _solve_joint(w)
        if ground:
            _ground_contacts(bodies, scene, dt)

    for body in bodies.values():
        if body.kinematic:
            continue
        body.position = body.position + body.velocity * dt
        w = body.angular_velocity
        dq = 0.5 * dt * quat_mul(np.array([0.0, w[0], w[1], w[2]]), body.orientation)
        body.orientation = quat_normalize(body.orientation + dq)
        speed = max(np.linalg.norm(body.velocity), np.linalg.norm(w))
        if speed > BLOWUP_SPEED:
            raise NumericalBlowupError(
                f"velocity {speed:.3g} exceeds {BLOWUP_SPEED:g} on segment "
                f"{body.segment_id!r}",
                step=out.step_index,
                segment=body.segment_id,
            )

    out.time = t_end
    out.step_index += 1
    out.pending_touches = remaining
    return out


# ---------------------------------------------------------------------------
# DOF violation oracle


@dataclass(frozen=True)
class DofReport:
    """Max observed displacement per joint-frame DOF over a trajectory.

    ``translation`` / ``rotation`` map axis index (0=a, 1=b, 2=c) to the
    max |displacement| (m) / |angle| (rad); ``locked`` flags which of them
    the joint type constrains."""

    translation: dict[int, float]
    rotation: dict[int, float]
    locked_translation: tuple[int, ...]
    locked_rotation: tuple[int, ...]

    def max_locked_translation(self) -> float:
        return max((self.translation[i] for i in self.locked_translation), default=0.0)

    def max_locked_rotation(self) -> float:
        return max((self.rotation[i] for i in self.locked_rotation), default=0.0)


def dof_violation(history, scene, joint_id: str) -> DofReport:
    """Measure per-DOF drift/motion of one joint across recorded states."""
    spec = next((j for j in scene.joints if j.joint_id == joint_id), None)
    if spec is None:
        raise UnknownJointError(f"unknown joint {joint_id!r}")
    if not history:
        raise ValueError("history must be non-empty")

    trans = {0: 0.0, 1: 0.0, 2: 0.0}
    rot = {0: 0.0, 1: 0.0, 2: 0.0}
    for state in history:
        body_a = state.bodies[spec.base]
        body_b = state.bodies[spec.movable]
        pa = body_a.world_point(spec.anchor)
        pb = body_b.world_point(spec.anchor)
        axes = (body_a.rotation() @ spec.axes.T).T
        q_rel = quat_mul(quat_conj(body_a.orientation), body_b.orientation)
        phi = body_a.rotation() @ quat_to_rotvec(q_rel)
        sep = pb - pa
        for i in range(3):
            trans[i] = max(trans[i], abs(float(sep @ axes[i])))
            rot[i] = max(rot[i], abs(float(phi @ axes[i])))

    free_t = spec.joint_type.free_trans_axes
    free_r = spec.joint_type.free_rot_axes
    return DofReport(
        translation=trans,
        rotation=rot,
        locked_translation=tuple(i for i in range(3) if i not in free_t),
        locked_rotation=tuple(i for i in range(3) if i not in free_r),
    )
