"""Collision world: occupancy voxels, static boxes and link boxes.

Every robot body is grown by ``d_safe`` on each half-extent before testing.
Box pairs use the separating-axis test; occupied voxels are axis-aligned cubes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import _kernels
from .kinematics import RobotModel, forward_kinematics

_SAT_EPS = 1e-9


@dataclass
class Obb:
    center: np.ndarray
    half_extents: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).reshape(3)
        self.half_extents = np.asarray(self.half_extents, dtype=float).reshape(3)
        self.rotation = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        if np.any(self.half_extents <= 0):
            raise ValueError("box half-extents must be positive")
        if not np.allclose(self.rotation.T @ self.rotation, np.eye(3), atol=1e-9):
            raise ValueError("box rotation is not orthonormal")

    def vertices(self) -> np.ndarray:
        signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)])
        return self.center + (signs * self.half_extents) @ self.rotation.T


# index tables for the nine edge-edge axes A_i x B_j
_I = np.repeat(np.arange(3), 3)
_J = np.tile(np.arange(3), 3)
_I1, _I2 = (_I + 1) % 3, (_I + 2) % 3
_J1, _J2 = (_J + 1) % 3, (_J + 2) % 3


def obb_overlap(ca, Ra, ha, cb, Rb, hb) -> np.ndarray:
    """Pairwise separating-axis test over N box pairs.

    All arguments are stacked arrays, (N, 3) or (N, 3, 3); rotation columns are
    the box axes. Touching boxes count as overlapping. Returns a bool (N,) array.
    """
    RaT = np.swapaxes(Ra, 1, 2)
    R = RaT @ Rb
    t = (RaT @ (cb - ca)[:, :, None])[:, :, 0]
    absR = np.abs(R) + _SAT_EPS

    # axes of A, then axes of B
    sep = np.any(np.abs(t) > ha + (absR @ hb[:, :, None])[:, :, 0], axis=1)
    tb = (t[:, None, :] @ R)[:, 0, :]
    sep |= np.any(np.abs(tb) > (ha[:, None, :] @ absR)[:, 0, :] + hb, axis=1)
    # edge-edge cross products
    ra = ha[:, _I1] * absR[:, _I2, _J] + ha[:, _I2] * absR[:, _I1, _J]
    rb = hb[:, _J1] * absR[:, _I, _J2] + hb[:, _J2] * absR[:, _I, _J1]
    lhs = np.abs(t[:, _I2] * R[:, _I1, _J] - t[:, _I1] * R[:, _I2, _J])
    sep |= np.any(lhs > ra + rb, axis=1)
    return ~sep


def boxes_overlap(a: Obb, b: Obb) -> bool:
    return bool(
        obb_overlap(
            a.center[None], a.rotation[None], a.half_extents[None],
            b.center[None], b.rotation[None], b.half_extents[None],
        )[0]
    )


class OccupancyGrid:
    """Sparse set of occupied voxels stored as a dense bitmap over their bounding range.

    Voxel ``(i, j, k)`` covers ``origin + [i, i+1) * resolution`` on each axis.
    """

    def __init__(self, origin=(0.0, 0.0, 0.0), resolution: float = 0.01, occupied=()):
        self.origin = np.asarray(origin, dtype=float).reshape(3)
        self.resolution = float(resolution)
        if not self.resolution > 0 or not np.all(np.isfinite(self.origin)):
            raise ValueError("grid needs resolution > 0 and a finite origin")
        idx = np.asarray(occupied, dtype=np.int64).reshape(-1, 3)
        idx = np.unique(idx, axis=0)
        self.indices = idx
        if len(idx):
            self._lo = idx.min(axis=0)
            shape = idx.max(axis=0) - self._lo + 1
            self._bitmap = np.zeros(tuple(shape), dtype=bool)
            rel = idx - self._lo
            self._bitmap[rel[:, 0], rel[:, 1], rel[:, 2]] = True
        else:
            self._lo = np.zeros(3, dtype=np.int64)
            self._bitmap = np.zeros((0, 0, 0), dtype=bool)

    @classmethod
    def from_boxes(cls, boxes, origin=(0.0, 0.0, 0.0), resolution: float = 0.01, occupied=()):
        """Voxelize axis-aligned boxes given as ``(center, half_extents)`` pairs."""
        origin = np.asarray(origin, dtype=float)
        cells = [np.asarray(occupied, dtype=np.int64).reshape(-1, 3)]
        for center, half in boxes:
            center = np.asarray(center, dtype=float)
            half = np.asarray(half, dtype=float)
            lo = np.floor((center - half - origin) / resolution + 1e-9).astype(np.int64)
            hi = np.ceil((center + half - origin) / resolution - 1e-9).astype(np.int64)
            axes = [np.arange(a, max(b, a + 1)) for a, b in zip(lo, hi)]
            cells.append(np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3))
        return cls(origin, resolution, np.concatenate(cells))

    def __len__(self) -> int:
        return len(self.indices)

    def is_occupied(self, index) -> bool:
        rel = np.asarray(index, dtype=np.int64) - self._lo
        if np.any(rel < 0) or np.any(rel >= self._bitmap.shape):
            return False
        return bool(self._bitmap[tuple(rel)])

    def voxel_center(self, index) -> np.ndarray:
        return self.origin + (np.asarray(index, dtype=float) + 0.5) * self.resolution

    def occupied_in_aabb(self, lo, hi) -> np.ndarray:
        """Indices of occupied voxels whose cube touches the closed box [lo, hi]."""
        if not len(self.indices):
            return np.empty((0, 3), dtype=np.int64)
        a = np.floor((np.asarray(lo) - self.origin) / self.resolution).astype(np.int64) - self._lo
        b = np.floor((np.asarray(hi) - self.origin) / self.resolution).astype(np.int64) - self._lo + 1
        a = np.maximum(a, 0)
        b = np.minimum(b, self._bitmap.shape)
        if np.any(b <= a):
            return np.empty((0, 3), dtype=np.int64)
        sub = self._bitmap[a[0]:b[0], a[1]:b[1], a[2]:b[2]]
        hits = np.argwhere(sub)
        return hits + a + self._lo


@dataclass
class Attachment:
    """Payload box rigidly fixed to a chain's TCP frame."""

    chain: int
    center: np.ndarray
    half_extents: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).reshape(3)
        self.half_extents = np.asarray(self.half_extents, dtype=float).reshape(3)
        self.rotation = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        if np.any(self.half_extents <= 0):
            raise ValueError("attachment half-extents must be positive")


def default_self_pairs(robot: RobotModel) -> list[tuple[int, int]]:
    return [(i, j) for i, j in combinations(range(robot.n), 2) if not robot.adjacent(i, j)]


class Scene:
    """Immutable collision world for one robot."""

    def __init__(
        self,
        robot: RobotModel,
        grid: OccupancyGrid | None = None,
        static_boxes=(),
        d_safe: float = 0.01,
        self_collision_pairs=None,
        attachment: Attachment | None = None,
    ):
        if d_safe < 0:
            raise ValueError("d_safe must be non-negative")
        self.robot = robot
        self.grid = grid if grid is not None else OccupancyGrid()
        self.static_boxes = list(static_boxes)
        self.d_safe = float(d_safe)
        self.attachment = attachment
        if attachment is not None and not 0 <= attachment.chain < len(robot.chains):
            raise ValueError(f"attachment refers to unknown chain {attachment.chain}")

        if self_collision_pairs is None:
            pairs = default_self_pairs(robot)
        else:
            pairs = []
            for i, j in self_collision_pairs:
                i, j = int(i), int(j)
                if i == j:
                    raise ValueError(f"self-collision pair ({i}, {i}) pairs a link with itself")
                if not (0 <= i < robot.n and 0 <= j < robot.n):
                    raise ValueError(f"self-collision pair ({i}, {j}) names an unknown link")
                if robot.adjacent(i, j):
                    continue
                pairs.append((min(i, j), max(i, j)))
            pairs = sorted(set(pairs))
        self.self_collision_pairs = pairs

        if self.static_boxes:
            self._sc = np.array([b.center for b in self.static_boxes])
            self._sR = np.array([b.rotation for b in self.static_boxes])
            self._sh = np.array([b.half_extents for b in self.static_boxes])
            self._sr = np.linalg.norm(self._sh, axis=1)

        owner = list(range(robot.n)) + list(robot.finger_owner)
        if attachment is not None:
            owner.append(robot.last_link[attachment.chain])
        owner = np.array(owner, dtype=int)
        pa, pb = [], []
        for i, j in pairs:
            for a in np.flatnonzero(owner == i):
                for b in np.flatnonzero(owner == j):
                    pa.append(a)
                    pb.append(b)
        self._pair_a = np.array(pa, dtype=int)
        self._pair_b = np.array(pb, dtype=int)
        self._kdata = _kernels.pack_scene(self)

    @property
    def dim(self) -> int:
        return self.robot.n

    def with_d_safe(self, d_safe: float) -> "Scene":
        return Scene(self.robot, self.grid, self.static_boxes, d_safe,
                     self.self_collision_pairs, self.attachment)

    def bodies(self, q):
        """World boxes of all robot bodies at ``q`` (not inflated)."""
        poses = forward_kinematics(self.robot, q)
        c, R, h = poses.box_centers, poses.box_rotations, poses.box_half_extents
        att = self.attachment
        if att is not None:
            Rt = poses.tcp_rotations[att.chain]
            c = np.vstack([c, poses.tcp[att.chain] + Rt @ att.center])
            R = np.concatenate([R, (Rt @ att.rotation)[None]])
            h = np.vstack([h, att.half_extents])
        return c, R, h


def _hits_static(scene: Scene, c, R, h) -> bool:
    d = np.linalg.norm(c[:, None, :] - scene._sc[None, :, :], axis=2)
    reach = np.linalg.norm(h, axis=1)[:, None] + scene._sr[None, :]
    bi, si = np.nonzero(d <= reach)
    if not len(bi):
        return False
    return bool(np.any(obb_overlap(c[bi], R[bi], h[bi], scene._sc[si], scene._sR[si], scene._sh[si])))


def _hits_grid(scene: Scene, c, R, h) -> bool:
    grid = scene.grid
    ext = np.einsum("nij,nj->ni", np.abs(R), h)
    lo, hi = c - ext, c + ext
    owners, cells = [], []
    for b in range(len(c)):
        idx = grid.occupied_in_aabb(lo[b], hi[b])
        if len(idx):
            owners.append(np.full(len(idx), b))
            cells.append(idx)
    if not cells:
        return False
    bi = np.concatenate(owners)
    cells = np.concatenate(cells)
    vc = grid.origin + (cells + 0.5) * grid.resolution
    vh = np.full((len(cells), 3), 0.5 * grid.resolution)
    vR = np.broadcast_to(np.eye(3), (len(cells), 3, 3))
    return bool(np.any(obb_overlap(c[bi], R[bi], h[bi], vc, vR, vh)))


def _hits_self(scene: Scene, c, R, h) -> bool:
    a, b = scene._pair_a, scene._pair_b
    if not len(a):
        return False
    near = np.linalg.norm(c[a] - c[b], axis=1) <= np.linalg.norm(h[a], axis=1) + np.linalg.norm(h[b], axis=1)
    a, b = a[near], b[near]
    if not len(a):
        return False
    return bool(np.any(obb_overlap(c[a], R[a], h[a], c[b], R[b], h[b])))


def config_is_free_reference(scene: Scene, q) -> bool:
    """Plain numpy version of ``config_is_free``; slower, kept for cross-checking."""
    c, R, h = scene.bodies(q)
    h = h + scene.d_safe
    if scene.static_boxes and _hits_static(scene, c, R, h):
        return False
    if len(scene.grid) and _hits_grid(scene, c, R, h):
        return False
    return not _hits_self(scene, c, R, h)


def config_is_free(scene: Scene, q) -> bool:
    q = scene.robot.check_config(q)
    return bool(_kernels.config_free(q, scene._kdata))


def configs_are_free(scene: Scene, qs) -> np.ndarray:
    qs = np.ascontiguousarray(qs, dtype=float).reshape(-1, scene.dim)
    if not np.all(np.isfinite(qs)):
        raise ValueError("configurations contain non-finite values")
    return _kernels.configs_free(qs, scene._kdata)


def segment_steps(q_a, q_b, check_resolution: float) -> int:
    """Number of sub-intervals used to check a segment.

    The smallest power of two whose spacing (max-norm) is within the resolution,
    so grids for ``r`` and ``r / 2`` nest.
    """
    if not check_resolution > 0:
        raise ValueError("check_resolution must be positive")
    span = float(np.max(np.abs(np.asarray(q_b) - np.asarray(q_a)))) if len(q_a) else 0.0
    m = 1
    while span > m * check_resolution:
        m *= 2
    return m


def interpolate(q_a, q_b, i: int, m: int) -> np.ndarray:
    # symmetric weights so segment(a, b) and segment(b, a) visit identical points
    return ((m - i) / m) * q_a + (i / m) * q_b


def segment_is_free(scene: Scene, q_a, q_b, check_resolution: float, include_start: bool = True) -> bool:
    """Check every interpolated configuration on the straight segment, endpoints included.

    With ``include_start=False`` the start is assumed already verified.
    """
    q_a = scene.robot.check_config(q_a)
    q_b = scene.robot.check_config(q_b)
    m = segment_steps(q_a, q_b, check_resolution)
    return bool(_kernels.segment_free(q_a, q_b, m, include_start, scene._kdata))


def motion_is_free(scene: Scene, q_a, q_b, margin: float = 0.005, include_start: bool = True) -> bool:
    """Conservative test of the continuous straight segment.

    True guarantees every configuration on the segment is free, so
    ``segment_is_free`` passes at any resolution. Motions that come within
    ``margin`` of contact (beyond ``d_safe``) may be rejected.
    """
    if not margin > 0:
        raise ValueError("margin must be positive")
    q_a = scene.robot.check_config(q_a)
    q_b = scene.robot.check_config(q_b)
    return bool(_kernels.motion_free(q_a, q_b, include_start, margin, scene._kdata))


def path_is_free(scene: Scene, waypoints, check_resolution: float) -> bool:
    waypoints = np.asarray(waypoints, dtype=float)
    if not config_is_free(scene, waypoints[0]):
        return False
    return all(
        segment_is_free(scene, a, b, check_resolution, include_start=False)
        for a, b in zip(waypoints[:-1], waypoints[1:])
    )
