import copy
import functools
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from priorplan.collision import Obb, OccupancyGrid, Scene
from priorplan.kinematics import Chain, Joint, RobotModel, planar_arm, rpy_to_matrix

# first calls trigger numba compilation, so per-example deadlines are meaningless
settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def ring_boxes(radius, gap, n_boxes=48, half_thickness=0.02, half_height=0.1):
    """Boxes tangent to a circle, leaving one opening of chord ``gap`` centred on +x."""
    first = gap / 2 / radius
    dphi = (2 * math.pi - gap / radius) / n_boxes
    boxes = []
    for k in range(n_boxes):
        a = first + (k + 0.5) * dphi
        half_len = radius * dphi / 2 * (1.02 if 0 < k < n_boxes - 1 else 1.0)
        boxes.append(Obb([radius * math.cos(a), radius * math.sin(a), 0.0],
                         [half_thickness, half_len, half_height], rpy_to_matrix([0, 0, a])))
    return boxes


def slot_scene() -> Scene:
    """Yaw joint then a roll joint; the ring confines q1 to |q1| < 0.05 whatever q2 is."""
    joints = [
        Joint([0, 0, 1], [0.3, 0, 0], (-math.pi, math.pi), [0.15, 0, 0], [0.15, 0.02, 0.02]),
        Joint([1, 0, 0], [0.3, 0, 0], (-math.pi, math.pi), [0.15, 0, 0], [0.15, 0.02, 0.02]),
    ]
    return Scene(RobotModel([Chain(joints)]), None, ring_boxes(0.45, 0.11), 0.01)


def wall_scene(x=0.5, d_safe=0.0) -> Scene:
    """Unit planar arm facing a voxel wall one voxel thick at ``x``."""
    res = 0.01
    i = int(round(x / res))
    cells = [(i, j, k) for j in range(-150, 151) for k in range(-3, 3)]
    return Scene(planar_arm((1.0, 1.0)), OccupancyGrid((0, 0, 0), res, cells), (), d_safe)


def dual_arm() -> RobotModel:
    def arm(base, yaw):
        js = [Joint(ax, [0, 0, 0.3], (-math.pi, math.pi), [0, 0, 0.15], [0.03, 0.03, 0.15])
              for ax in ([0, 0, 1], [0, 1, 0], [0, 1, 0])]
        return Chain(js, base_position=base, base_rotation=rpy_to_matrix([0, 0, yaw]),
                     tcp_offset=[0, 0, 0.05])
    return RobotModel([arm([0, 0, 0], 0.0), arm([1.0, 0, 0], math.pi)])


@pytest.fixture
def empty_planar():
    return Scene(planar_arm((1.0, 1.0)), None, (), 0.01)


@functools.cache
def builtin(name):
    from priorplan.scenario import load_scenario

    return load_scenario(name)


@pytest.fixture(scope="session")
def narrow():
    return builtin("narrow_passage_2dof")


def random_polyline(rng, L, n, scale=1.0):
    return np.cumsum(rng.normal(scale=scale, size=(L, n)), axis=0)


def minimal(**extra):
    """Small two-link scenario dict with one static box and one query."""
    link = {"axis": [0, 0, 1], "offset": [0.5, 0, 0], "limits": [-math.pi, math.pi],
            "box": {"center": [0.25, 0, 0], "half_extents": [0.25, 0.02, 0.02]}}
    data = {
        "name": "mini",
        "robot": {"chains": [{"joints": [link, copy.deepcopy(link)]}]},
        "static_boxes": [{"center": [0.0, 0.9, 0.0], "half_extents": [0.1, 0.05, 0.1]}],
        "queries": [{"label": "a", "q_init": [0.0, 0.0], "q_goal": [-1.0, 0.5]}],
    }
    data.update(extra)
    return data


def two_clusters(rng, per=50, spread=0.1):
    return np.concatenate([rng.normal(-5, spread, per), rng.normal(5, spread, per)])[:, None]


def well_posed_dataset(rng):
    n = int(rng.integers(1, 5))
    K = int(rng.integers(1, 4))
    parts = []
    for _ in range(K):
        A = rng.normal(scale=rng.uniform(0.05, 1.0), size=(n, n))
        parts.append(rng.multivariate_normal(rng.normal(scale=3, size=n), A @ A.T + 1e-3 * np.eye(n),
                                             size=int(rng.integers(10 * n, 80))))
    return np.concatenate(parts), K


ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


def verdict(number: int, ok: bool, detail: str) -> None:
    """Record one acceptance check for the end-of-run summary, then assert it."""
    ACCEPTANCE.setdefault(number, []).append((bool(ok), detail))
    assert ok, f"criterion {number}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[number]
        ok = all(c for c, _ in checks)
        detail = "; ".join(d if c else f"FAILED {d}" for c, d in checks)
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
