import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import wall_scene
from priorplan.collision import config_is_free, path_is_free, segment_is_free
from priorplan.fgmm import Fgmm
from priorplan.planner import PlannerParams, Tree, extend, manhattan_distance, nearest_node, plan

vec3 = st.lists(st.floats(-10, 10), min_size=3, max_size=3).map(np.array)


def test_manhattan_examples():
    assert manhattan_distance([0, 0], [1, -2]) == 3
    assert manhattan_distance([0.3, 0.1], [0.3, 0.1]) == 0
    with pytest.raises(ValueError):
        manhattan_distance([0, 0], [0, 0, 0])


@given(vec3, vec3, vec3)
def test_manhattan_metric(a, b, c):
    assert manhattan_distance(a, b) == manhattan_distance(b, a)
    assert manhattan_distance(a, c) <= manhattan_distance(a, b) + manhattan_distance(b, c) + 1e-9


def test_nearest_node():
    tree = Tree([0.0, 0.0])
    assert nearest_node(tree, np.array([5.0, 5.0])) == 0
    tree.add([1.0, 1.0], 0)
    assert nearest_node(tree, np.array([0.9, 0.9])) == 1
    tree.add([-1.0, -1.0], 0)
    assert nearest_node(tree, np.array([0.0, 1.0])) == 0  # ties: (0,0) and (1,1) are both at 1
    tree2 = Tree([1.0, 0.0])
    tree2.add([0.0, 1.0], 0)
    assert nearest_node(tree2, np.array([0.0, 0.0])) == 0


def test_tree_branch_and_growth():
    tree = Tree([0.0], capacity=2)
    i = 0
    for k in range(1, 10):
        i = tree.add([float(k)], i)
    assert tree.size == 10
    np.testing.assert_array_equal(tree.branch(5)[:, 0], [0, 1, 2, 3, 4, 5])
    assert tree.branch(0).shape == (1, 1)


def test_extend_short_free_step(empty_planar):
    params = PlannerParams()
    tree = Tree([0.0, 0.0])
    idx = extend(tree, 0, [0.05, 0.02], empty_planar, params)
    assert idx == 1 and tree.size == 2
    assert np.array_equal(tree.nodes[1], [0.05, 0.02])


def test_extend_to_itself(empty_planar):
    tree = Tree([0.4, 0.4])
    assert extend(tree, 0, [0.4, 0.4], empty_planar, PlannerParams()) == 0
    assert tree.size == 1


def test_extend_long_free_line(empty_planar):
    params = PlannerParams(step_size=0.1)
    tree = Tree([0.0, 0.0])
    idx = extend(tree, 0, [1.0, -0.5], empty_planar, params)
    assert np.array_equal(tree.nodes[idx], [1.0, -0.5])
    steps = np.linalg.norm(np.diff(tree.nodes[: tree.size], axis=0), axis=1)
    assert np.all(steps <= 0.1 + 1e-12)


def test_extend_stops_before_obstacle():
    scene = wall_scene(0.5, d_safe=0.01)
    params = PlannerParams(step_size=0.1)
    start, goal = np.array([2.5, 0.0]), np.array([0.0, 0.0])
    assert config_is_free(scene, start) and not config_is_free(scene, goal)
    tree = Tree(start)
    idx = extend(tree, 0, goal, scene, params)
    reached = tree.nodes[idx]
    direction = (goal - start) / np.linalg.norm(goal - start)
    # on the segment, strictly short of the sample
    t = (reached - start) @ direction
    np.testing.assert_allclose(reached, start + t * direction, atol=1e-12)
    assert 0 < t < np.linalg.norm(goal - start)
    # every node and every edge up to it is free at a resolution far finer than the step
    assert path_is_free(scene, tree.branch(idx), 1e-3)
    # the following step runs into the wall once the validator's margin is added to d_safe
    nxt = reached + min(params.step_size, np.linalg.norm(goal - reached)) * direction
    guarded = scene.with_d_safe(scene.d_safe + params.motion_margin)
    assert not segment_is_free(guarded, reached, nxt, 1e-3)


def test_degenerate_query(empty_planar):
    res = plan(empty_planar, [0.2, 0.3], [0.2, 0.3], rng=np.random.default_rng(0), sampler="uniform")
    assert res.success and res.extended_nodes == 0
    assert res.path.shape == (1, 2)


@pytest.mark.parametrize("sampler", ["prior", "uniform", "goal-bias"])
def test_empty_scene_distant_configs(empty_planar, sampler):
    params = PlannerParams(exemplars=replace(PlannerParams().exemplars, M=60))
    q_init, q_goal = np.array([-2.5, 2.0]), np.array([2.6, -1.9])
    res = plan(empty_planar, q_init, q_goal, params, np.random.default_rng(1), sampler=sampler)
    assert res.success
    assert np.array_equal(res.path[0], q_init) and np.array_equal(res.path[-1], q_goal)
    assert path_is_free(empty_planar, res.path, params.check_resolution)
    assert res.extended_nodes >= len(res.path) - 2
    assert res.iterations >= 1


def test_seeded_determinism(narrow):
    q = narrow.queries[0]
    a = plan(narrow.scene, q.q_init, q.q_goal, narrow.planner, np.random.default_rng(5))
    b = plan(narrow.scene, q.q_init, q.q_goal, narrow.planner, np.random.default_rng(5))
    assert np.array_equal(a.path, b.path)
    assert (a.extended_nodes, a.iterations) == (b.extended_nodes, b.iterations)


@pytest.mark.parametrize("p_bias", [0.0, 1.0])
def test_pure_sampling_modes_stay_valid(narrow, p_bias):
    q = narrow.queries[0]
    params = replace(narrow.planner, p_bias=p_bias)
    for seed in range(3):
        res = plan(narrow.scene, q.q_init, q.q_goal, params, np.random.default_rng(seed))
        if res.success:
            assert path_is_free(narrow.scene, res.path, params.check_resolution)
            assert np.array_equal(res.path[0], q.q_init) and np.array_equal(res.path[-1], q.q_goal)


def test_narrow_passage_success_rate(narrow):
    q = narrow.queries[0]
    wins = sum(plan(narrow.scene, q.q_init, q.q_goal, narrow.planner, np.random.default_rng(100 + s)).success
               for s in range(20))
    assert wins >= 18


def test_budget_exhausted(narrow):
    q = narrow.queries[0]
    params = replace(narrow.planner, max_iterations=3)
    res = plan(narrow.scene, q.q_init, q.q_goal, params, np.random.default_rng(0), sampler="uniform")
    assert not res.success and res.path is None
    assert res.iterations == 3 and res.extended_nodes > 0 and res.planning_time >= 0


def test_invalid_endpoints(narrow):
    q = narrow.queries[0]
    with pytest.raises(ValueError, match="collision"):
        plan(narrow.scene, [math.pi / 2, 0.0], q.q_goal, narrow.planner, np.random.default_rng(0))
    with pytest.raises(ValueError, match="limits"):
        plan(narrow.scene, q.q_init, [4.0, 0.0], narrow.planner, np.random.default_rng(0))
    with pytest.raises(ValueError):
        plan(narrow.scene, q.q_init, [0.0], narrow.planner, np.random.default_rng(0))
    with pytest.raises(ValueError, match="sampler"):
        plan(narrow.scene, q.q_init, q.q_goal, narrow.planner, np.random.default_rng(0), sampler="rrt*")


def test_supplied_priors_skip_fitting(narrow):
    q = narrow.queries[0]
    priors = (Fgmm([1.0], [q.q_init], [0.01 * np.eye(2)]), Fgmm([1.0], [q.q_goal], [0.01 * np.eye(2)]))
    res = plan(narrow.scene, q.q_init, q.q_goal, narrow.planner, np.random.default_rng(0), priors=priors)
    assert res.fit_time == 0.0
    assert res.success


@pytest.mark.parametrize("kwargs", [dict(step_size=0), dict(p_bias=1.5), dict(max_iterations=0)])
def test_params_validation(kwargs):
    with pytest.raises(ValueError):
        PlannerParams(**kwargs)
