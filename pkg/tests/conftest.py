import numpy as np
import pytest

from idikit.mesh import TriMesh
from idikit.physics import JointSpec, JointType, attach_joint, quat_from_axis_angle, quat_to_matrix
from idikit.primitives import box, bridge, dumbbell, icosphere, torus, unit_cube
from idikit.scene import IdiScene, SceneSegment, SimConfig


# canonical fixture resolutions: small enough for the dense eigensolver and
# fast slicing, big enough to be non-trivial
DUMBBELL_KW = dict(rings=28, segments=22)


@pytest.fixture(scope="session")
def cube():
    return unit_cube()


@pytest.fixture(scope="session")
def sphere3():
    return icosphere(1.0, 3)


@pytest.fixture(scope="session")
def small_torus():
    return torus(n_major=24, n_minor=12)


@pytest.fixture(scope="session")
def bell():
    return dumbbell(**DUMBBELL_KW)


@pytest.fixture(scope="session")
def gate():
    return bridge()


@pytest.fixture(scope="session")
def disjoint_spheres():
    a = icosphere(0.5, 2, center=(-1.0, 0.0, 0.0))
    b = icosphere(0.5, 2, center=(1.0, 0.0, 0.0))
    return TriMesh.validate(
        np.concatenate([a.vertices, b.vertices]),
        np.concatenate([a.triangles, b.triangles + len(a.vertices)]),
    )


def make_pendulum_scene(resistance="low", tilt_deg=5.0, gravity=(0.0, -9.81, 0.0)):
    """Chunky rod (0.1 x 0.2 x 0.1 m) hinged at its top end, authored
    tilted so the rest pose is the release pose."""
    anchor = np.array([0.0, 0.2, 0.0])
    rod = box(size=(0.1, 0.2, 0.1), center=(0.0, 0.1, 0.0))
    rot = quat_to_matrix(quat_from_axis_angle([0, 0, 1], np.deg2rad(tilt_deg)))
    rod = rod.transformed(rot, anchor - rot @ anchor)
    base = box(size=(0.06, 0.04, 0.06), center=(0.0, 0.225, 0.0))
    scene = IdiScene(
        name="pendulum",
        segments=(SceneSegment("base", base), SceneSegment("rod", rod)),
        sim=SimConfig(gravity=tuple(gravity)),
    )
    spec = JointSpec(
        joint_id="hinge",
        joint_type=JointType.HINGE,
        base="base",
        movable="rod",
        anchor=anchor,
        axes=np.array([[0.0, 0, 1], [1.0, 0, 0], [0.0, 1, 0]]),
        resistance=resistance,
    )
    return attach_joint(scene, spec), anchor


def make_two_cube_scene(joint_type, resistance="low", size=0.1, axes=None):
    """Base cube above, movable cube below, joined at y=0."""
    base = box(size=(size,) * 3, center=(0.0, size / 2, 0.0))
    movable = box(size=(size,) * 3, center=(0.0, -size / 2, 0.0))
    scene = IdiScene(
        name=f"two-cube-{joint_type.value}",
        segments=(SceneSegment("base", base), SceneSegment("movable", movable)),
        sim=SimConfig(gravity=(0.0, 0.0, 0.0)),
    )
    if axes is None:
        if joint_type is JointType.PIVOT:
            axes = np.array([[0.0, 1, 0], [0.0, 0, 1], [1.0, 0, 0]])
        else:
            axes = np.array([[0.0, 0, 1], [1.0, 0, 0], [0.0, 1, 0]])
    spec = JointSpec(
        joint_id="j0",
        joint_type=joint_type,
        base="base",
        movable="movable",
        anchor=np.zeros(3),
        axes=axes,
        resistance=resistance,
    )
    return attach_joint(scene, spec)


def touch_sweep(start, velocity, t0=0.0, steps=30, dt=1.0 / 120.0, radius=0.01):
    """Touch events sampling a straight fingertip sweep, one per step."""
    from idikit.physics import TouchEvent

    start = np.asarray(start, dtype=np.float64)
    velocity = np.asarray(velocity, dtype=np.float64)
    return [
        TouchEvent(time=t0 + k * dt, center=start + velocity * (k * dt),
                   velocity=velocity, radius=radius)
        for k in range(steps)
    ]


# ---------------------------------------------------------------------------
# acceptance reporting: one pass/fail line per criterion


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1].replace("test_", "", 1)
    verdict = "PASS" if report.passed else "FAIL"
    print(f"\n[ACCEPTANCE {verdict}] {name}", flush=True)
