"""Scenario files: robot, collision world, queries and parameter overrides in JSON."""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .collision import Attachment, Obb, OccupancyGrid, Scene, config_is_free
from .exemplars import ExemplarParams
from .kinematics import Chain, Gripper, Joint, RobotModel, rpy_to_matrix
from .optimizer import OptimizerParams
from .planner import PlannerParams


class ScenarioError(ValueError):
    pass


@dataclass
class Query:
    label: str
    q_init: np.ndarray
    q_goal: np.ndarray


@dataclass
class Scenario:
    name: str
    scene: Scene
    queries: list[Query]
    planner: PlannerParams
    optimizer: OptimizerParams
    source: dict

    def query(self, label: str | None = None) -> Query:
        if label is None:
            return self.queries[0]
        for q in self.queries:
            if q.label == label:
                return q
        raise KeyError(f"scenario {self.name!r} has no query {label!r}")


def _data_dir():
    return resources.files("priorplan").joinpath("data")


def schema() -> dict:
    return json.loads(_data_dir().joinpath("scenario.schema.json").read_text())


def builtin_scenarios() -> list[str]:
    folder = _data_dir().joinpath("scenarios")
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".json"))


def scenario_path(name_or_path) -> Path:
    p = Path(name_or_path)
    if p.exists():
        return p
    folder = _data_dir().joinpath("scenarios")
    candidate = folder.joinpath(f"{name_or_path}.json")
    if candidate.is_file():
        return Path(str(candidate))
    raise ScenarioError(f"no scenario file or built-in scenario named {name_or_path!r}; "
                        f"built-ins: {', '.join(builtin_scenarios())}")


def _build_robot(cfg: dict) -> RobotModel:
    chains = []
    for ci, c in enumerate(cfg["chains"]):
        joints = [
            Joint(axis=j["axis"], offset=j["offset"], limits=tuple(j["limits"]),
                  box_center=j["box"]["center"], box_half_extents=j["box"]["half_extents"],
                  name=j.get("name", f"c{ci}j{k}"))
            for k, j in enumerate(c["joints"])
        ]
        gripper = None
        if "gripper" in c:
            g = c["gripper"]
            gripper = Gripper(g["opening"], g["finger_half_extents"], g.get("offset", [0, 0, 0]),
                              g.get("open_axis", [0, 1, 0]))
        chains.append(Chain(joints=joints, base_position=c.get("base_position", [0, 0, 0]),
                            base_rotation=rpy_to_matrix(c.get("base_rpy", [0, 0, 0])),
                            tcp_offset=c.get("tcp_offset", [0, 0, 0]), gripper=gripper,
                            name=c.get("name", f"chain{ci}")))
    return RobotModel(chains)


def _build_grid(cfg: dict | None) -> OccupancyGrid:
    cfg = cfg or {}
    boxes = [(b["center"], b["half_extents"]) for b in cfg.get("boxes", [])]
    return OccupancyGrid.from_boxes(boxes, cfg.get("origin", [0, 0, 0]), cfg.get("resolution", 0.01),
                                    cfg.get("occupied", []))


def _with_overrides(base, overrides: dict):
    names = {f.name for f in fields(base)}
    unknown = set(overrides) - names
    if unknown:
        raise ScenarioError(f"unknown parameter(s) {sorted(unknown)} for {type(base).__name__}")
    return replace(base, **overrides)


def build_scenario(data: dict, name: str = "scenario") -> Scenario:
    try:
        jsonschema.validate(data, schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"{name}: schema violation at {where}: {exc.message}") from None
    name = data.get("name", name)
    try:
        robot = _build_robot(data["robot"])
        static = [Obb(b["center"], b["half_extents"], rpy_to_matrix(b.get("rpy", [0, 0, 0])))
                  for b in data.get("static_boxes", [])]
        att = None
        if "attachment" in data:
            a = data["attachment"]
            att = Attachment(a["chain"], a["center"], a["half_extents"], rpy_to_matrix(a.get("rpy", [0, 0, 0])))
        scene = Scene(robot, _build_grid(data.get("grid")), static, data.get("d_safe", 0.01),
                      data["robot"].get("self_collision_pairs"), att)
        planner_cfg = dict(data.get("planner", {}))
        ex = _with_overrides(ExemplarParams(), planner_cfg.pop("exemplars", {}))
        planner = _with_overrides(PlannerParams(exemplars=ex), planner_cfg)
        optimizer = _with_overrides(OptimizerParams(), data.get("optimizer", {}))
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise ScenarioError(f"{name}: {exc}") from exc

    queries = []
    for q in data["queries"]:
        label = q["label"]
        for key in ("q_init", "q_goal"):
            v = np.asarray(q[key], dtype=float)
            if v.shape != (robot.n,):
                raise ScenarioError(f"{name}: query {label!r} {key} has {len(v)} values, robot has {robot.n} joints")
            if not robot.within_limits(v):
                raise ScenarioError(f"{name}: query {label!r} {key} is outside the joint limits")
            if not config_is_free(scene, v):
                raise ScenarioError(f"{name}: query {label!r} {key} is in collision")
        queries.append(Query(label, np.asarray(q["q_init"], dtype=float), np.asarray(q["q_goal"], dtype=float)))
    return Scenario(name, scene, queries, planner, optimizer, data)


def load_scenario(name_or_path) -> Scenario:
    path = scenario_path(name_or_path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON: {exc}") from None
    return build_scenario(data, path.stem)
