"""Serial-chain robot model and forward kinematics.

A robot is one or more revolute chains. Each joint rotates its frame about a
fixed local axis and then translates by a fixed offset to reach the next joint.
Every joint carries one link box, expressed in the frame right after the joint
rotation, so a box centred at ``offset / 2`` spans the segment between joints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation


class DimensionError(ValueError):
    """Configuration length does not match the robot."""


def rpy_to_matrix(rpy) -> np.ndarray:
    return Rotation.from_euler("xyz", np.asarray(rpy, dtype=float)).as_matrix()


def _skew(v: np.ndarray) -> np.ndarray:
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


@dataclass
class Joint:
    axis: np.ndarray
    offset: np.ndarray
    limits: tuple[float, float]
    box_center: np.ndarray
    box_half_extents: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=float)
        norm = np.linalg.norm(self.axis)
        if self.axis.shape != (3,) or norm < 1e-12:
            raise ValueError(f"joint {self.name!r}: axis must be a nonzero 3-vector")
        self.axis = self.axis / norm
        self.offset = np.asarray(self.offset, dtype=float).reshape(3)
        self.box_center = np.asarray(self.box_center, dtype=float).reshape(3)
        self.box_half_extents = np.asarray(self.box_half_extents, dtype=float).reshape(3)
        lo, hi = (float(v) for v in self.limits)
        if not lo < hi:
            raise ValueError(f"joint {self.name!r}: limits need lo < hi, got {lo}, {hi}")
        if lo < -2 * math.pi - 1e-12 or hi > 2 * math.pi + 1e-12:
            raise ValueError(f"joint {self.name!r}: limits must lie within [-2pi, 2pi]")
        self.limits = (lo, hi)
        if np.any(self.box_half_extents <= 0):
            raise ValueError(f"joint {self.name!r}: link box half-extents must be positive")
        k = _skew(self.axis)
        self._k = k
        self._k2 = k @ k

    def rotation(self, angle: float) -> np.ndarray:
        return np.eye(3) + math.sin(angle) * self._k + (1.0 - math.cos(angle)) * self._k2


@dataclass
class Gripper:
    """Two fixed finger boxes on the last link, split along ``open_axis``.

    Positions are in the last link frame relative to the chain's final frame
    origin; the fingers sit ``opening / 2`` either side of ``offset``.
    """

    opening: float
    finger_half_extents: np.ndarray
    offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    open_axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0, 0.0]))

    def __post_init__(self):
        self.finger_half_extents = np.asarray(self.finger_half_extents, dtype=float).reshape(3)
        self.offset = np.asarray(self.offset, dtype=float).reshape(3)
        axis = np.asarray(self.open_axis, dtype=float).reshape(3)
        self.open_axis = axis / np.linalg.norm(axis)
        if self.opening < 0 or np.any(self.finger_half_extents <= 0):
            raise ValueError("gripper needs opening >= 0 and positive finger half-extents")

    def finger_centers(self) -> np.ndarray:
        shift = 0.5 * self.opening + float(np.abs(self.open_axis) @ self.finger_half_extents)
        return np.stack([self.offset + shift * self.open_axis, self.offset - shift * self.open_axis])


@dataclass
class Chain:
    joints: list[Joint]
    base_position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    base_rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    tcp_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gripper: Gripper | None = None
    name: str = ""

    def __post_init__(self):
        if not self.joints:
            raise ValueError(f"chain {self.name!r} has no joints")
        self.base_position = np.asarray(self.base_position, dtype=float).reshape(3)
        self.base_rotation = np.asarray(self.base_rotation, dtype=float).reshape(3, 3)
        if not np.allclose(self.base_rotation @ self.base_rotation.T, np.eye(3), atol=1e-9):
            raise ValueError(f"chain {self.name!r}: base rotation is not orthonormal")
        self.tcp_offset = np.asarray(self.tcp_offset, dtype=float).reshape(3)


class RobotModel:
    """Immutable collection of chains; joints are indexed chain by chain."""

    def __init__(self, chains: list[Chain]):
        if not chains:
            raise ValueError("robot needs at least one chain")
        self.chains = list(chains)
        self.joints = [j for c in self.chains for j in c.joints]
        self.n = len(self.joints)
        self.limits = np.array([j.limits for j in self.joints], dtype=float)
        self.chain_of_joint = np.array(
            [ci for ci, c in enumerate(self.chains) for _ in c.joints], dtype=int
        )
        starts = np.cumsum([0] + [len(c.joints) for c in self.chains])
        self.chain_slices = [slice(int(a), int(b)) for a, b in zip(starts[:-1], starts[1:])]
        self.last_link = [s.stop - 1 for s in self.chain_slices]
        self._box_local = np.array([j.box_center for j in self.joints])
        self._half = np.array([j.box_half_extents for j in self.joints])

        # finger boxes are extra bodies owned by the last link of their chain
        owners, centers, halves = [], [], []
        for ci, chain in enumerate(self.chains):
            if chain.gripper is None:
                continue
            for c in chain.gripper.finger_centers():
                owners.append(self.last_link[ci])
                centers.append(c)
                halves.append(chain.gripper.finger_half_extents)
        self.finger_owner = np.array(owners, dtype=int)
        self._finger_local = np.array(centers).reshape(-1, 3)
        self._finger_half = np.array(halves).reshape(-1, 3)

    @property
    def n_links(self) -> int:
        return self.n

    def check_config(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if q.ndim != 1 or q.shape[0] != self.n:
            raise DimensionError(f"expected a configuration of length {self.n}, got shape {q.shape}")
        if not np.all(np.isfinite(q)):
            raise ValueError("configuration contains non-finite values")
        return q

    def within_limits(self, q) -> bool:
        q = np.asarray(q, dtype=float)
        return bool(np.all(q >= self.limits[:, 0]) and np.all(q <= self.limits[:, 1]))

    def clamp(self, q) -> np.ndarray:
        return np.clip(q, self.limits[:, 0], self.limits[:, 1])

    def adjacent(self, i: int, j: int) -> bool:
        """Links share a joint: consecutive within one chain."""
        return self.chain_of_joint[i] == self.chain_of_joint[j] and abs(i - j) == 1


@dataclass
class LinkPoseSet:
    """World poses of every link plus the bodies the collision checker needs.

    ``box_*`` arrays hold one row per link first, followed by finger boxes;
    ``box_owner`` maps each row to its link index.
    """

    rotations: np.ndarray  # (n, 3, 3) link frame orientation
    origins: np.ndarray  # (n, 3) joint positions
    box_centers: np.ndarray
    box_rotations: np.ndarray
    box_half_extents: np.ndarray
    box_owner: np.ndarray
    tcp: np.ndarray  # (chains, 3)
    tcp_rotations: np.ndarray  # (chains, 3, 3)
    out_of_limits: bool


def forward_kinematics(model: RobotModel, q) -> LinkPoseSet:
    q = model.check_config(q)
    n = model.n
    rots = np.empty((n, 3, 3))
    origins = np.empty((n, 3))
    n_chains = len(model.chains)
    tcp = np.empty((n_chains, 3))
    tcp_rot = np.empty((n_chains, 3, 3))
    ends = np.empty((n_chains, 3))
    idx = 0
    for ci, chain in enumerate(model.chains):
        R = chain.base_rotation
        p = chain.base_position
        for joint in chain.joints:
            R = R @ joint.rotation(q[idx])
            rots[idx] = R
            origins[idx] = p
            p = p + R @ joint.offset
            idx += 1
        ends[ci] = p
        tcp[ci] = p + R @ chain.tcp_offset
        tcp_rot[ci] = R

    centers = origins + np.einsum("nij,nj->ni", rots, model._box_local)
    box_rots = rots
    halves = model._half
    owner = np.arange(n)
    if len(model.finger_owner):
        fo = model.finger_owner
        # fingers hang off the final frame origin of their chain
        fcenters = ends[model.chain_of_joint[fo]] + np.einsum("nij,nj->ni", rots[fo], model._finger_local)
        centers = np.vstack([centers, fcenters])
        box_rots = np.concatenate([rots, rots[fo]])
        halves = np.vstack([halves, model._finger_half])
        owner = np.concatenate([owner, fo])

    return LinkPoseSet(
        rotations=rots,
        origins=origins,
        box_centers=centers,
        box_rotations=box_rots,
        box_half_extents=halves,
        box_owner=owner,
        tcp=tcp,
        tcp_rotations=tcp_rot,
        out_of_limits=not model.within_limits(q),
    )


def tcp_positions(model: RobotModel, q) -> np.ndarray:
    return forward_kinematics(model, q).tcp


def tcp_distance(model: RobotModel, q_a, q_b, chain_id: int) -> float:
    if not 0 <= chain_id < len(model.chains):
        raise IndexError(f"unknown chain id {chain_id}")
    pa = forward_kinematics(model, q_a).tcp[chain_id]
    pb = forward_kinematics(model, q_b).tcp[chain_id]
    return float(np.linalg.norm(pa - pb))


def planar_arm(lengths=(1.0, 1.0), width: float = 0.02, limits=(-math.pi, math.pi)) -> RobotModel:
    """Planar arm in the xy-plane with z-axis joints; handy for tests and 2-DOF scenes."""
    joints = [
        Joint(
            axis=[0, 0, 1],
            offset=[length, 0, 0],
            limits=limits,
            box_center=[length / 2, 0, 0],
            box_half_extents=[length / 2, width, width],
            name=f"j{i}",
        )
        for i, length in enumerate(lengths)
    ]
    return RobotModel([Chain(joints=joints, name="arm")])
