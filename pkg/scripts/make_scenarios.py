"""Regenerate the built-in scenario files.

    python scripts/make_scenarios.py [--out-dir DIR]

narrow_passage_2dof: planar two-link arm inside a ring of boxes with one gap.
lid_6dof: six-joint arm lowering its gripper into a slot with 3 cm of total play.
handover_12dof: two facing six-joint arms meeting over a voxelized crate, one holding a part.
"""

import argparse
import json
import math
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares
from scipy.spatial.transform import Rotation

from priorplan.collision import config_is_free
from priorplan.kinematics import forward_kinematics
from priorplan.scenario import build_scenario

OUT = Path(__file__).resolve().parents[1] / "src" / "priorplan" / "data" / "scenarios"
PI = math.pi


def r9(x):
    return [round(float(v), 9) for v in x]


def narrow_passage_2dof() -> dict:
    link, half_w = 0.3, 0.02
    ring_r, ring_half_t, gap, n_boxes = 0.57, 0.02, 0.11, 64
    joints = [
        {"name": f"j{i}", "axis": [0, 0, 1], "offset": [link, 0, 0], "limits": [-PI, PI],
         "box": {"center": [link / 2, 0, 0], "half_extents": [link / 2, half_w, half_w]}}
        for i in range(2)
    ]
    boxes = []
    first = gap / 2 / ring_r
    dphi = (2 * PI - gap / ring_r) / n_boxes
    for k in range(n_boxes):
        a = first + (k + 0.5) * dphi
        half_len = ring_r * dphi / 2
        # interior boxes overlap slightly so the ring has no cracks; the two ends bound the gap exactly
        if 0 < k < n_boxes - 1:
            half_len *= 1.02
        boxes.append({"center": r9([ring_r * math.cos(a), ring_r * math.sin(a), 0]),
                      "half_extents": r9([ring_half_t, half_len, 0.1]), "rpy": r9([0, 0, a])})
    return {
        "name": "narrow_passage_2dof",
        "description": "Planar arm (0.3 m links) inside a ring of boxes at 0.57 m with an 0.11 m gap. "
                       "Joint space holds two rooms joined by a corridor about 0.08 rad wide; "
                       "the goal reaches through the gap.",
        "robot": {"chains": [{"name": "arm", "joints": joints}]},
        "static_boxes": boxes,
        "d_safe": 0.01,
        "queries": [{"label": "through_gap", "q_init": [0.5, -2.8], "q_goal": [-0.15, 0.3]}],
    }


def arm6(name, base_position=(0, 0, 0), base_rpy=(0, 0, 0)) -> dict:
    # roll-pitch-pitch-roll-pitch-roll, zero pose points straight up
    joint_table = [
        ("base", [0, 0, 1], 0.20, [0.045, 0.045, 0.10]),
        ("shoulder", [0, 1, 0], 0.28, [0.035, 0.04, 0.14]),
        ("elbow", [0, 1, 0], 0.25, [0.03, 0.035, 0.125]),
        ("wrist1", [0, 0, 1], 0.07, [0.03, 0.03, 0.035]),
        ("wrist2", [0, 1, 0], 0.06, [0.028, 0.028, 0.03]),
        ("flange", [0, 0, 1], 0.03, [0.035, 0.035, 0.015]),
    ]
    joints = [
        {"name": f"{name}_{jn}", "axis": axis, "offset": [0, 0, length],
         "limits": [-PI, PI] if jn != "elbow" else [-2.8, 2.8],
         "box": {"center": [0, 0, length / 2], "half_extents": half}}
        for jn, axis, length, half in joint_table
    ]
    return {
        "name": name, "base_position": list(base_position), "base_rpy": list(base_rpy),
        "tcp_offset": [0, 0, 0.06], "joints": joints,
        "gripper": {"opening": 0.04, "finger_half_extents": [0.008, 0.005, 0.03],
                    "offset": [0, 0, 0.05], "open_axis": [0, 1, 0]},
    }


def solve_ik(model, chain, position, rotation, seed):
    """Position and full orientation of one chain's TCP by least squares."""
    sl = model.chain_slices[chain]
    lo, hi = model.limits[sl, 0], model.limits[sl, 1]
    q_full = np.zeros(model.n)

    def residual(x):
        q_full[sl] = x
        pose = forward_kinematics(model, q_full)
        rot_err = Rotation.from_matrix(rotation.T @ pose.tcp_rotations[chain]).as_rotvec()
        return np.concatenate([pose.tcp[chain] - position, 0.2 * rot_err])

    sol = least_squares(residual, seed, bounds=(lo, hi), xtol=1e-14, ftol=1e-14, gtol=1e-14)
    if np.max(np.abs(sol.fun)) > 1e-8:
        raise RuntimeError(f"IK did not converge for chain {chain}: residual {np.max(np.abs(sol.fun))}")
    return sol.x


def lid_6dof() -> dict:
    data = {
        "name": "lid_6dof",
        "description": "Six-joint arm lowering an open gripper between two voxelized walls 9 cm apart "
                       "(fingers span 6 cm, so 3 cm of total clearance).",
        "robot": {"chains": [arm6("arm")]},
        # voxel edges fall on y = +-0.045 with this origin
        "grid": {"origin": [0, 0.005, 0], "resolution": 0.01, "boxes": [
            {"center": [0.45, -0.125, 0.09], "half_extents": [0.1, 0.08, 0.11]},
            {"center": [0.45, 0.125, 0.09], "half_extents": [0.1, 0.08, 0.11]},
        ]},
        "static_boxes": [{"center": [0.25, 0, -0.05], "half_extents": [0.6, 0.6, 0.03]}],
        "d_safe": 0.005,
        "queries": [{"label": "into_slot", "q_init": [], "q_goal": []}],
    }
    sc = build_scenario({**data, "queries": [{"label": "tmp", "q_init": [0.0] * 6, "q_goal": [0.0] * 6}]})
    model = sc.scene.robot
    down = Rotation.from_euler("y", PI).as_matrix()  # tool z down, fingers along world y
    q_goal = solve_ik(model, 0, np.array([0.45, 0.0, 0.15]), down, np.array([0, 0.8, 1.2, 0, 1.1, 0]))
    q_init = np.array([1.2, -0.2, 1.0, 0.3, 0.9, -0.4])
    for q in (q_init, q_goal):
        assert config_is_free(sc.scene, q), q
    data["queries"] = [{"label": "into_slot", "q_init": r9(q_init), "q_goal": r9(q_goal)}]
    return data


def handover_12dof() -> dict:
    data = {
        "name": "handover_12dof",
        "description": "Two facing six-joint arms 1.08 m apart; the left arm holds a part and both "
                       "meet above a voxelized crate.",
        "robot": {"chains": [arm6("left"), arm6("right", (1.08, 0, 0), (0, 0, PI))]},
        "grid": {"origin": [0, 0, 0], "resolution": 0.01, "boxes": [
            {"center": [0.54, 0.0, 0.07], "half_extents": [0.1, 0.18, 0.07]},
        ]},
        "static_boxes": [{"center": [0.54, 0, -0.05], "half_extents": [0.9, 0.6, 0.03]}],
        "attachment": {"chain": 0, "center": [0, 0, 0.02], "half_extents": [0.012, 0.012, 0.04]},
        "d_safe": 0.01,
        "queries": [],
    }
    tmp = {**data, "queries": [{"label": "tmp", "q_init": [0.0] * 12, "q_goal": [0.0] * 12}]}
    sc = build_scenario(tmp)
    model = sc.scene.robot
    # left tool z along +x, right tool z along -x, both with fingers along world y
    left_R = Rotation.from_euler("y", PI / 2).as_matrix()
    right_R = Rotation.from_euler("y", -PI / 2).as_matrix()
    ql = solve_ik(model, 0, np.array([0.44, 0.0, 0.40]), left_R, np.array([0, 0.6, 1.0, 0, 0.0, 0]))
    qr = solve_ik(model, 1, np.array([0.64, 0.0, 0.40]), right_R, np.array([0, 0.6, 1.0, 0, 0.0, 0]))
    q_goal = np.concatenate([ql, qr])
    q_init = np.array([0.9, -0.3, 1.1, 0, 0.8, 0, -0.9, -0.3, 1.1, 0, 0.8, 0])
    for q in (q_init, q_goal):
        assert config_is_free(sc.scene, q), q
    data["queries"] = [{"label": "handover", "q_init": r9(q_init), "q_goal": r9(q_goal)}]
    return data


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", type=Path, default=OUT)
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for make in (narrow_passage_2dof, lid_6dof, handover_12dof):
        data = make()
        build_scenario(data)  # full validation, including endpoint collision checks
        path = args.out_dir / f"{data['name']}.json"
        path.write_text(json.dumps(data, indent=1) + "\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
