"""Four-stage path post-processing: shortcut, simplify, refine joint reversals, spline."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .bspline import Trajectory, fit_bspline
from .collision import Scene, config_is_free, motion_is_free
from .kinematics import RobotModel, forward_kinematics

DP_METRICS = ("task_space", "joint_space")
NULL_TCP = 1e-12  # m; TCP steps this small count as no motion


@dataclass
class OptimizerParams:
    shortcut_iterations: int = 200
    dp_threshold: float = 0.005  # m in task_space mode, rad in joint_space mode
    alpha_max: float = math.pi  # rad/m
    dp_metric: str = "task_space"
    spline_samples: int = 20
    step_size: float = 0.1
    check_resolution: float = 0.05
    motion_margin: float = 0.005  # m
    strict_curve: bool = False  # also collision-check the dense spline samples

    def __post_init__(self):
        if self.shortcut_iterations < 0:
            raise ValueError("shortcut_iterations must be >= 0")
        if not self.dp_threshold > 0:
            raise ValueError("dp_threshold must be positive")
        if not self.alpha_max > 0:
            raise ValueError("alpha_max must be positive")
        if self.dp_metric not in DP_METRICS:
            raise ValueError(f"dp_metric must be one of {DP_METRICS}")


def as_path(waypoints) -> np.ndarray:
    """(L, n) float array with consecutive duplicates (1e-12 per joint) removed."""
    P = np.array(waypoints, dtype=float)
    if P.ndim != 2 or len(P) == 0:
        raise ValueError("path must be a non-empty (L, n) array")
    if not np.all(np.isfinite(P)):
        raise ValueError("path contains non-finite values")
    idx = [0]
    for i in range(1, len(P)):
        if np.any(np.abs(P[i] - P[idx[-1]]) > 1e-12):
            idx.append(i)
    last = len(P) - 1
    if idx[-1] != last:
        # the goal must survive bitwise, so it replaces its near-duplicate
        if len(idx) > 1:
            idx[-1] = last
        elif not np.array_equal(P[0], P[last]):
            idx.append(last)
    return P[idx]


def path_length(path) -> float:
    P = np.asarray(path, dtype=float)
    return float(np.sum(np.abs(np.diff(P, axis=0)))) if len(P) > 1 else 0.0


def shortcut_optimize(scene: Scene, path, M: int, rng: np.random.Generator,
                      params: OptimizerParams | None = None) -> np.ndarray:
    params = params or OptimizerParams()
    P = np.array(path, dtype=float)
    for _ in range(M):
        if len(P) < 3:
            break
        i, j = np.sort(rng.choice(len(P), size=2, replace=False))
        if j - i < 2:
            continue
        seg = np.abs(np.diff(P[i:j + 1], axis=0)).sum()
        direct = np.abs(P[j] - P[i]).sum()
        if not direct < seg:
            continue
        pts = _kernels.extend_points(P[i].copy(), P[j].copy(), params.step_size,
                                     params.motion_margin, scene._kdata)
        if len(pts) == 0 or not np.array_equal(pts[-1], P[j]):
            continue
        if path_length(np.vstack([P[i], pts])) < seg:
            P = np.vstack([P[: i + 1], pts[:-1], P[j:]])
    return P


def _point_segment_distance(X: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    denom = float(ab @ ab)
    t = np.zeros(len(X)) if denom == 0 else np.clip((X - a) @ ab / denom, 0.0, 1.0)
    return np.linalg.norm(X - (a + t[:, None] * ab), axis=1)


def _deviation_fn(scene: Scene, P: np.ndarray, metric: str):
    if metric == "joint_space":
        return lambda a, b: _point_segment_distance(P[a + 1:b], P[a], P[b])
    tcp = np.array([forward_kinematics(scene.robot, q).tcp for q in P])  # (L, chains, 3)

    def dev(a, b):
        per_chain = [_point_segment_distance(tcp[a + 1:b, c], tcp[a, c], tcp[b, c])
                     for c in range(tcp.shape[1])]
        return np.max(per_chain, axis=0)

    return dev


def dp_keep(P: np.ndarray, deviation, threshold: float) -> np.ndarray:
    """Indices kept by Douglas-Peucker, given ``deviation(a, b)`` for the points strictly between."""
    keep = {0, len(P) - 1}
    stack = [(0, len(P) - 1)]
    while stack:
        a, b = stack.pop()
        if b - a < 2:
            continue
        d = deviation(a, b)
        k = int(np.argmax(d))
        if d[k] < threshold:
            continue
        mid = a + 1 + k
        keep.add(mid)
        stack.append((a, mid))
        stack.append((mid, b))
    return np.array(sorted(keep))


def douglas_peucker(path, scene: Scene, params: OptimizerParams | None = None) -> np.ndarray:
    """Simplify, then restore the original waypoints under any kept edge that fails validation."""
    params = params or OptimizerParams()
    P = np.asarray(path, dtype=float)
    if len(P) < 3:
        return P.copy()
    keep = dp_keep(P, _deviation_fn(scene, P, params.dp_metric), params.dp_threshold)
    out = [keep[0]]
    for a, b in zip(keep[:-1], keep[1:]):
        if b - a > 1 and not motion_is_free(scene, P[a], P[b], params.motion_margin, include_start=False):
            out.extend(range(a + 1, b))
        out.append(b)
    return P[np.array(out)]


def joint_rotation_metrics(model: RobotModel, path):
    """Per-waypoint joint rotation rate ``alpha`` and reversal cost ``G``, both (L, n).

    ``alpha[i, j]`` uses the step from waypoint i-1 to i and the TCP of the
    chain owning joint j; row 0 is zero. A joint that turns while its TCP stays
    put (within ``NULL_TCP``) gets ``inf``. ``G`` is nonzero only where
    consecutive steps of a joint have strictly opposite signs; first and last
    rows are zero.
    """
    P = np.asarray(path, dtype=float)
    L, n = P.shape
    tcp = np.array([forward_kinematics(model, q).tcp for q in P])
    dq = np.diff(P, axis=0)  # (L-1, n)
    dp = np.linalg.norm(np.diff(tcp, axis=0), axis=2)[:, model.chain_of_joint]  # (L-1, n)
    dp = np.where(dp <= NULL_TCP, 0.0, dp)
    alpha = np.zeros((L, n))
    with np.errstate(divide="ignore", invalid="ignore"):
        step = np.where(dq == 0, 0.0, np.abs(dq) / dp)
    alpha[1:] = step
    G = np.zeros((L, n))
    if L >= 3:
        rev = dq[:-1] * dq[1:] < 0
        G[1:-1] = np.where(rev, alpha[1:-1] + alpha[2:], 0.0)
    return alpha, G


def merge_null_motion(scene: Scene, path, params: OptimizerParams | None = None) -> np.ndarray:
    """Drop interior waypoints whose TCPs coincide with the previous kept waypoint, if the bridging edge is free."""
    params = params or OptimizerParams()
    P = np.asarray(path, dtype=float)
    tcp = np.array([forward_kinematics(scene.robot, q).tcp for q in P])
    out = [0]
    for i in range(1, len(P) - 1):
        prev = out[-1]
        if np.all(np.linalg.norm(tcp[i] - tcp[prev], axis=1) <= NULL_TCP) and motion_is_free(
            scene, P[prev], P[i + 1], params.motion_margin
        ):
            continue
        out.append(i)
    out.append(len(P) - 1)
    return P[np.array(out)]


@dataclass
class RefineReport:
    refined: list[tuple[int, int]] = field(default_factory=list)  # (waypoint, joint) changes kept
    unresolved: list[tuple[int, int]] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.refined)


def joint_rotation_refine(scene: Scene, path, params: OptimizerParams | None = None):
    """Flatten joint reversals whose cost reaches ``alpha_max``.

    The offending joint value is moved onto the line between its neighbours at
    the waypoint's TCP arc-length fraction. A change is kept only if both
    adjacent edges stay free. Returns ``(path, RefineReport)``; after the last
    pass every entry of ``report.refined`` re-measures below ``alpha_max``.
    """
    params = params or OptimizerParams()
    model = scene.robot
    P = merge_null_motion(scene, path, params)
    report = RefineReport()
    if len(P) < 3:
        return P, report
    failed: set[tuple[int, int]] = set()
    refined: list[tuple[int, int]] = []
    for _ in range(10 * len(P) * P.shape[1]):
        _, G = joint_rotation_metrics(model, P)
        todo = [(int(i), int(j)) for i, j in np.argwhere(G >= params.alpha_max) if (i, j) not in failed]
        if not todo:
            break
        i, j = todo[0]
        c = model.chain_of_joint[j]
        tcp = [forward_kinematics(model, P[k]).tcp[c] for k in (i - 1, i, i + 1)]
        a = np.linalg.norm(tcp[1] - tcp[0])
        b = np.linalg.norm(tcp[2] - tcp[1])
        t = a / (a + b) if a + b > 0 else 0.5
        q = P[i].copy()
        q[j] = P[i - 1, j] + t * (P[i + 1, j] - P[i - 1, j])
        if (motion_is_free(scene, P[i - 1], q, params.motion_margin, include_start=False)
                and motion_is_free(scene, q, P[i + 1], params.motion_margin)):
            P[i] = q
            if (i, j) not in refined:
                refined.append((i, j))
        else:
            failed.add((i, j))

    _, G = joint_rotation_metrics(model, P)
    report.refined = [(i, j) for i, j in refined if G[i, j] < params.alpha_max]
    report.unresolved = sorted({(int(i), int(j)) for i, j in np.argwhere(G >= params.alpha_max)})
    return P, report


@dataclass
class StageMetrics:
    raw_nodes: int
    raw_len_rad: float
    shortcut_nodes: int
    shortcut_len_rad: float
    dp_nodes: int
    dp_len_rad: float
    refined_joints: int
    unresolved_joints: int
    curve_free: bool | None = None


def optimize(scene: Scene, path, params: OptimizerParams | None = None,
             rng: np.random.Generator | None = None):
    """Run all four stages; returns ``(trajectory, metrics, control_polygon)``."""
    params = params or OptimizerParams()
    rng = np.random.default_rng() if rng is None else rng
    raw = as_path(path)
    short = shortcut_optimize(scene, raw, params.shortcut_iterations, rng, params)
    simple = douglas_peucker(short, scene, params)
    refined, report = joint_rotation_refine(scene, simple, params)
    if len(refined) == 1:
        refined = np.vstack([refined, refined])
    traj = fit_bspline(refined, params.spline_samples)
    curve_free = None
    if params.strict_curve:
        curve_free = all(config_is_free(scene, q) for q in traj.samples)
    metrics = StageMetrics(
        raw_nodes=len(raw), raw_len_rad=path_length(raw),
        shortcut_nodes=len(short), shortcut_len_rad=path_length(short),
        dp_nodes=len(simple), dp_len_rad=path_length(simple),
        refined_joints=report.count, unresolved_joints=len(report.unresolved),
        curve_free=curve_free,
    )
    return traj, metrics, refined
