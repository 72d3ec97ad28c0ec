import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.optimize import linprog
from scipy.spatial.transform import Rotation
from shapely.geometry import Polygon

from conftest import builtin, wall_scene
from priorplan.collision import (
    Attachment, Obb, OccupancyGrid, Scene, boxes_overlap, config_is_free, config_is_free_reference,
    configs_are_free, motion_is_free, path_is_free, segment_is_free,
)
from priorplan.kinematics import DimensionError, forward_kinematics, planar_arm

angle = st.floats(-math.pi, math.pi, allow_nan=False)
config2 = st.tuples(angle, angle).map(np.array)


def rect(center, R, half):
    corners = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]]) * half[:2]
    return Polygon(center[:2] + corners @ R[:2, :2].T)


def planar_oracle(scene, q):
    """2-D polygon test; valid when every box is a z-rotated prism overlapping in height."""
    pose = forward_kinematics(scene.robot, q)
    links = [rect(c, R, h + scene.d_safe) for c, R, h in
             zip(pose.box_centers, pose.box_rotations, pose.box_half_extents)]
    walls = [rect(b.center, b.rotation, b.half_extents) for b in scene.static_boxes]
    return not any(link.intersects(w) for link in links for w in walls)


def box_lp_overlap(a: Obb, b: Obb, grow: float) -> bool:
    """Is there a point inside both boxes (each grown by ``grow``)? Solved as an LP feasibility problem."""
    A, ub = [], []
    for box in (a, b):
        for k in range(3):
            axis = box.rotation[:, k]
            c = axis @ box.center
            h = box.half_extents[k] + grow
            A += [axis, -axis]
            ub += [c + h, -(c - h)]
    res = linprog(np.zeros(3), A_ub=np.array(A), b_ub=np.array(ub), bounds=[(None, None)] * 3)
    return res.status == 0


boxes = st.builds(
    lambda c, h, rv: Obb(c, h, Rotation.from_rotvec(rv).as_matrix()),
    st.lists(st.floats(-1, 1), min_size=3, max_size=3),
    st.lists(st.floats(0.05, 0.8), min_size=3, max_size=3),
    st.lists(st.floats(-3, 3), min_size=3, max_size=3),
)


@given(boxes, boxes)
def test_separating_axis_matches_lp(a, b):
    inner = box_lp_overlap(a, b, -1e-6)
    outer = box_lp_overlap(a, b, 1e-6)
    assume(inner == outer)  # skip near-touching pairs
    assert boxes_overlap(a, b) == inner
    assert boxes_overlap(b, a) == inner


def test_empty_world_always_free():
    scene = Scene(planar_arm((1.0, 1.0)), None, (), 0.05)
    for q in np.random.default_rng(0).uniform(-math.pi, math.pi, (50, 2)):
        assert config_is_free(scene, q)


def test_single_voxel_inside_link():
    grid = OccupancyGrid((0, 0, 0), 0.01, [(50, 0, 0)])  # cube [0.5, 0.51] x [0, 0.01] x [0, 0.01]
    scene = Scene(planar_arm((1.0, 1.0)), grid, (), 0.01)
    assert not config_is_free(scene, [0.0, 0.0])
    assert config_is_free(scene, [math.pi, 0.0])


def test_voxel_wall_example():
    scene = wall_scene(0.5, d_safe=0.01)
    assert not config_is_free(scene, [0.0, 0.0])
    assert config_is_free(scene, [math.pi, 0.0])


def point_sampling_hits(scene, q, per_axis=(200, 9, 9)):
    """Dense points inside each grown link box; any point inside an occupied voxel is a collision."""
    pose = forward_kinematics(scene.robot, q)
    grid = scene.grid
    for c, R, h in zip(pose.box_centers, pose.box_rotations, pose.box_half_extents):
        g = h + scene.d_safe
        axes = [np.linspace(-gk, gk, m) for gk, m in zip(g, per_axis)]
        local = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 3)
        pts = c + local @ R.T
        idx = np.floor((pts - grid.origin) / grid.resolution).astype(int)
        if any(grid.is_occupied(i) for i in np.unique(idx, axis=0)):
            return True
    return False


@pytest.mark.parametrize("q", [(0.0, 0.0), (math.pi, 0.0), (0.5, 0.3), (1.2, -2.0), (-0.9, 1.5)])
def test_voxel_wall_matches_point_sampling(q):
    scene = wall_scene(0.5, d_safe=0.01)
    assert config_is_free(scene, q) == (not point_sampling_hits(scene, q))


def test_narrow_passage_matches_polygon_oracle(narrow):
    scene = narrow.scene
    rng = np.random.default_rng(7)
    qs = rng.uniform(-math.pi, math.pi, (400, 2))
    fast = configs_are_free(scene, qs)
    for q, got in zip(qs, fast):
        assert got == planar_oracle(scene, q)
        assert got == config_is_free(scene, q) == config_is_free_reference(scene, q)


@pytest.mark.parametrize("name", ["lid_6dof", "handover_12dof"])
def test_kernel_matches_numpy_reference(name):
    scene = builtin(name).scene
    rng = np.random.default_rng(11)
    lo, hi = scene.robot.limits.T
    qs = rng.uniform(lo, hi, (300, scene.dim))
    q0 = builtin(name).queries[0].q_goal
    qs = np.vstack([qs, q0 + rng.normal(scale=0.15, size=(300, scene.dim))])
    fast = configs_are_free(scene, qs)
    ref = np.array([config_is_free_reference(scene, q) for q in qs])
    assert np.array_equal(fast, ref)
    assert 0 < fast.sum() < len(fast)  # both outcomes exercised


@given(config2, st.floats(0.0, 0.05), st.floats(0.0, 0.05))
def test_monotone_in_d_safe(q, a, b):
    scene = builtin("narrow_passage_2dof").scene
    lo, hi = sorted((a, b))
    if not config_is_free(scene.with_d_safe(lo), q):
        assert not config_is_free(scene.with_d_safe(hi), q)


def test_self_collision_pairs():
    arm = planar_arm((0.5, 0.5, 0.5))
    scene = Scene(arm, None, (), 0.01)
    assert scene.self_collision_pairs == [(0, 2)]
    folded = [0.0, math.pi - 0.05, math.pi - 0.05]  # third link doubles back over the first
    assert not config_is_free(scene, folded)
    assert config_is_free(Scene(arm, None, (), 0.01, self_collision_pairs=[]), folded)
    with pytest.raises(ValueError):
        Scene(arm, None, (), 0.01, self_collision_pairs=[(1, 1)])
    with pytest.raises(ValueError):
        Scene(arm, None, (), 0.01, self_collision_pairs=[(0, 9)])
    # adjacent pairs are silently dropped
    assert Scene(arm, None, (), 0.01, self_collision_pairs=[(0, 1), (1, 2)]).self_collision_pairs == []


def test_attachment_collides():
    arm = planar_arm((0.5,))
    wall = [Obb([0.8, 0, 0], [0.05, 0.5, 0.5])]
    bare = Scene(arm, None, wall, 0.0)
    held = Scene(arm, None, wall, 0.0, attachment=Attachment(0, [0.15, 0, 0], [0.1, 0.02, 0.02]))
    assert config_is_free(bare, [0.0])
    assert not config_is_free(held, [0.0])
    assert config_is_free(held, [math.pi])


def test_dimension_errors():
    scene = Scene(planar_arm((1.0, 1.0)), None, (), 0.01)
    with pytest.raises(DimensionError):
        config_is_free(scene, [0.0])
    with pytest.raises(DimensionError):
        segment_is_free(scene, [0, 0], [0, 0, 0], 0.1)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        OccupancyGrid((0, 0, 0), 0.0)
    with pytest.raises(ValueError):
        Obb([0, 0, 0], [1, 0, 1])
    with pytest.raises(ValueError):
        Scene(planar_arm((1.0,)), None, (), -0.1)
    with pytest.raises(ValueError):
        segment_is_free(Scene(planar_arm((1.0,)), None, ()), [0.0], [1.0], 0.0)


def test_grid_from_boxes_covers_box():
    grid = OccupancyGrid.from_boxes([([0.05, 0.05, 0.05], [0.02, 0.02, 0.02])], (0, 0, 0), 0.01)
    # [0.03, 0.07] covers voxel indices 3..6 on each axis
    assert len(grid) == 4 ** 3
    assert grid.is_occupied((3, 3, 3)) and grid.is_occupied((6, 6, 6))
    assert not grid.is_occupied((7, 3, 3)) and not grid.is_occupied((2, 3, 3))


def test_segment_examples(narrow):
    scene = narrow.scene
    q = narrow.queries[0]
    assert segment_is_free(scene, q.q_init, q.q_init, 0.05)
    blocked = np.array([math.pi / 2, 0.0])
    assert not config_is_free(scene, blocked)
    assert not segment_is_free(scene, q.q_init, blocked, 0.05)


def test_segment_with_colliding_midpoint(narrow):
    scene = narrow.scene
    a, b = np.array([2.8, 1.3]), np.array([0.2, -1.3])  # arm reaching into the ring halfway
    assert config_is_free(scene, a) and config_is_free(scene, b)
    ts = np.linspace(0, 1, 2001)  # far finer than the check resolution
    oracle = all(config_is_free_reference(scene, (1 - t) * a + t * b) for t in ts)
    assert not oracle
    assert not config_is_free(scene, 0.5 * (a + b))
    assert segment_is_free(scene, a, b, 0.05) == oracle


segments = st.tuples(config2, config2)


@given(segments, st.floats(0.01, 0.5))
def test_segment_symmetric_and_refinement_consistent(seg, res):
    scene = builtin("narrow_passage_2dof").scene
    a, b = seg
    ab = segment_is_free(scene, a, b, res)
    assert ab == segment_is_free(scene, b, a, res)
    if not ab:
        assert not segment_is_free(scene, a, b, res / 2)


@given(config2, st.tuples(st.floats(-0.4, 0.4), st.floats(-0.4, 0.4)).map(np.array))
def test_motion_check_is_conservative(q, delta):
    scene = builtin("narrow_passage_2dof").scene
    b = np.clip(q + delta, -math.pi, math.pi)
    if motion_is_free(scene, q, b):
        assert segment_is_free(scene, q, b, 1e-3)


def test_path_is_free(narrow):
    scene = narrow.scene
    a, b = np.array([2.8, 1.3]), np.array([0.2, -1.3])
    pts = [a, [2.6, 0.6], [1.9, -1.9], b]
    assert path_is_free(scene, pts, 0.05) == all(
        segment_is_free(scene, p, r, 0.05) for p, r in zip(pts[:-1], pts[1:]))
    assert not path_is_free(scene, [a, b], 0.05)
    assert not path_is_free(scene, [[1.5, 0.0], b], 0.05)  # colliding first waypoint
