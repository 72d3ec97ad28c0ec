"""Bidirectional RRT-Connect with mixture-prior and progress-driven sampling."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .collision import Scene, config_is_free, path_is_free
from .exemplars import ExemplarParams, collect_exemplars
from .fgmm import Fgmm, em_fit, sample as fgmm_sample
from .samplers import SIGMA_FLOOR, current_info_sampling, goal_bias_sampling, uniform_sampling

SAMPLERS = ("prior", "uniform", "goal-bias")
CONNECT_TOL = 1e-9


@dataclass
class PlannerParams:
    step_size: float = 0.1
    p_bias: float = 0.3
    max_iterations: int = 50_000
    check_resolution: float = 0.05  # sampled check every returned path is verified at
    motion_margin: float = 0.005  # m, slack of the conservative edge check
    exemplars: ExemplarParams = field(default_factory=ExemplarParams)
    K: int = 2
    em_tol: float = 1e-6
    sigma_floor: float = SIGMA_FLOOR
    p_goal: float = 0.05  # goal-bias baseline only

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if not 0.0 <= self.p_bias <= 1.0:
            raise ValueError("p_bias must lie in [0, 1]")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not self.check_resolution > 0:
            raise ValueError("check_resolution must be positive")
        if not self.motion_margin > 0:
            raise ValueError("motion_margin must be positive")
        if self.K < 1:
            raise ValueError("K must be at least 1")


@dataclass
class PlanResult:
    success: bool
    path: np.ndarray | None  # (L, n) waypoints from q_init to q_goal
    extended_nodes: int
    iterations: int
    planning_time: float
    fit_time: float = 0.0


def manhattan_distance(q_a, q_b) -> float:
    q_a = np.asarray(q_a, dtype=float)
    q_b = np.asarray(q_b, dtype=float)
    if q_a.shape != q_b.shape:
        raise ValueError(f"dimension mismatch: {q_a.shape} vs {q_b.shape}")
    return float(np.sum(np.abs(q_a - q_b)))


class Tree:
    """Growable node store; node 0 is the root."""

    def __init__(self, root, target=None, capacity: int = 1024):
        root = np.asarray(root, dtype=float)
        self.nodes = np.empty((capacity, len(root)))
        self.parent = np.empty(capacity, dtype=np.int64)
        self.nodes[0] = root
        self.parent[0] = -1
        self.size = 1
        self.target = None if target is None else np.asarray(target, dtype=float)
        self.min_dist = np.inf if target is None else manhattan_distance(root, target)

    @property
    def root(self) -> np.ndarray:
        return self.nodes[0]

    def add(self, q, parent: int) -> int:
        if self.size == len(self.nodes):
            self.nodes = np.concatenate([self.nodes, np.empty_like(self.nodes)])
            self.parent = np.concatenate([self.parent, np.empty_like(self.parent)])
        i = self.size
        self.nodes[i] = q
        self.parent[i] = parent
        self.size += 1
        if self.target is not None:
            self.min_dist = min(self.min_dist, float(np.sum(np.abs(self.nodes[i] - self.target))))
        return i

    def branch(self, i: int) -> np.ndarray:
        """Waypoints from the root down to node i."""
        idx = []
        while i >= 0:
            idx.append(i)
            i = int(self.parent[i])
        return self.nodes[idx[::-1]].copy()


def nearest_node(tree: Tree, q) -> int:
    # argmin returns the first minimum, so ties go to the lowest index
    return int(np.argmin(np.sum(np.abs(tree.nodes[: tree.size] - q), axis=1)))


def extend(tree: Tree, near_idx: int, q_sample, scene: Scene, params: PlannerParams) -> int:
    """Grow from node ``near_idx`` toward ``q_sample``; return the index of the last node reached."""
    q_sample = np.asarray(q_sample, dtype=float)
    points = _kernels.extend_points(tree.nodes[near_idx].copy(), q_sample, params.step_size,
                                    params.motion_margin, scene._kdata)
    idx = near_idx
    for q in points:
        idx = tree.add(q, idx)
    return idx


def fit_priors(scene: Scene, q_init, q_goal, params: PlannerParams, rng) -> tuple[Fgmm, Fgmm]:
    models = []
    for target in (q_init, q_goal):
        data = collect_exemplars(scene, target, params.exemplars, rng)
        model, _ = em_fit(data, params.K, tol=params.em_tol, rng=rng)
        models.append(model)
    return models[0], models[1]


def _check_endpoint(scene: Scene, q, name: str) -> np.ndarray:
    q = scene.robot.check_config(q)
    if not scene.robot.within_limits(q):
        raise ValueError(f"{name} is outside the joint limits")
    if not config_is_free(scene, q):
        raise ValueError(f"{name} is in collision")
    return q


def plan(scene: Scene, q_init, q_goal, params: PlannerParams | None = None,
         rng: np.random.Generator | None = None, sampler: str = "prior",
         priors: tuple[Fgmm, Fgmm] | None = None) -> PlanResult:
    """Connect ``q_init`` to ``q_goal``.

    ``sampler`` selects the proposal: ``prior`` mixes the two fitted mixtures
    with the progress-driven Gaussian, ``uniform`` and ``goal-bias`` are the
    baselines. ``priors`` skips exemplar collection and fitting.
    """
    params = params or PlannerParams()
    rng = np.random.default_rng() if rng is None else rng
    if sampler not in SAMPLERS:
        raise ValueError(f"unknown sampler {sampler!r}; choose from {SAMPLERS}")
    q_init = _check_endpoint(scene, q_init, "q_init")
    q_goal = _check_endpoint(scene, q_goal, "q_goal")

    fit_time = 0.0
    if sampler == "prior" and priors is None:
        t0 = time.perf_counter()
        priors = fit_priors(scene, q_init, q_goal, params, rng)
        fit_time = time.perf_counter() - t0

    t0 = time.perf_counter()
    if np.array_equal(q_init, q_goal):
        return PlanResult(True, q_init[None].copy(), 0, 0, time.perf_counter() - t0, fit_time)

    D = manhattan_distance(q_init, q_goal)
    limits = scene.robot.limits
    lo, hi = limits[:, 0], limits[:, 1]
    trees = [Tree(q_init, q_goal), Tree(q_goal, q_init)]
    # the mixture describing the region each tree is growing toward
    toward = None if priors is None else [priors[1], priors[0]]
    active = 0
    for it in range(1, params.max_iterations + 1):
        ta, tb = trees[active], trees[1 - active]
        if sampler == "uniform":
            q_s = uniform_sampling(limits, rng)
        elif sampler == "goal-bias":
            q_s = goal_bias_sampling(limits, ta.target, params.p_goal, rng)
        elif rng.random() < params.p_bias:
            q_s = np.clip(fgmm_sample(toward[active], rng), lo, hi)
        else:
            q_s = np.clip(current_info_sampling(D, ta.min_dist, ta.root, ta.target, rng,
                                                params.sigma_floor), lo, hi)

        ia = extend(ta, nearest_node(ta, q_s), q_s, scene, params)
        qa = ta.nodes[ia]
        ib = extend(tb, nearest_node(tb, qa), qa, scene, params)
        if np.all(np.abs(tb.nodes[ib] - qa) <= CONNECT_TOL):
            ends = (ia, ib) if active == 0 else (ib, ia)
            head = trees[0].branch(ends[0])
            tail = trees[1].branch(ends[1])[::-1]
            path = np.vstack([head, tail[1:]])
            if not path_is_free(scene, path, params.check_resolution):
                raise AssertionError("planner produced a path that fails validation")
            nodes = trees[0].size + trees[1].size - 2
            return PlanResult(True, path, nodes, it, time.perf_counter() - t0, fit_time)
        active = 1 - active

    nodes = trees[0].size + trees[1].size - 2
    return PlanResult(False, None, nodes, params.max_iterations, time.perf_counter() - t0, fit_time)
