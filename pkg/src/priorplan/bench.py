"""Seeded benchmark harness, CSV/summary output and the joint-space flood-fill oracle."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .collision import Scene, configs_are_free
from .exemplars import ExemplarError
from .optimizer import optimize
from .planner import SAMPLERS, plan
from .scenario import Scenario, build_scenario

CSV_COLUMNS = [
    "scenario", "query", "sampler", "seed", "success", "extended_nodes", "plan_time_s", "fit_time_s",
    "raw_nodes", "raw_len_rad", "shortcut_nodes", "shortcut_len_rad", "dp_nodes", "refined_joints",
]


@dataclass
class TrialRecord:
    scenario: str
    query: str
    sampler: str
    seed: int
    success: bool
    extended_nodes: int
    plan_time_s: float
    fit_time_s: float
    raw_nodes: int | None = None
    raw_len_rad: float | None = None
    shortcut_nodes: int | None = None
    shortcut_len_rad: float | None = None
    dp_nodes: int | None = None
    refined_joints: int | None = None
    path: np.ndarray | None = field(default=None, repr=False)
    control_polygon: np.ndarray | None = field(default=None, repr=False)

    def sort_key(self):
        return (self.sampler, self.query, self.seed)


def run_trial(scenario: Scenario, query_label: str, sampler: str, seed: int) -> TrialRecord:
    q = scenario.query(query_label)
    rng = np.random.default_rng(seed)
    try:
        res = plan(scenario.scene, q.q_init, q.q_goal, scenario.planner, rng, sampler=sampler)
    except ExemplarError:
        # prior could not be built; counts as a failed trial with no tree growth
        return TrialRecord(scenario.name, q.label, sampler, seed, False, 0, 0.0, 0.0)
    rec = TrialRecord(scenario.name, q.label, sampler, seed, res.success, res.extended_nodes,
                      res.planning_time, res.fit_time)
    if res.success:
        _, m, poly = optimize(scenario.scene, res.path, scenario.optimizer, rng)
        rec.raw_nodes, rec.raw_len_rad = m.raw_nodes, m.raw_len_rad
        rec.shortcut_nodes, rec.shortcut_len_rad = m.shortcut_nodes, m.shortcut_len_rad
        rec.dp_nodes, rec.refined_joints = m.dp_nodes, m.refined_joints
        rec.path, rec.control_polygon = res.path, poly
    return rec


def _worker(args):
    source, name, label, sampler, seed = args
    return run_trial(build_scenario(source, name), label, sampler, seed)


def run_benchmark(scenario: Scenario, samplers=SAMPLERS, trials: int = 20, base_seed: int = 0,
                  queries=None, workers: int = 1) -> list[TrialRecord]:
    """One record per sampler x query x trial; trial t uses seed ``base_seed + t``.

    Records come back sorted by (sampler, query, seed) whatever the worker count.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    for s in samplers:
        if s not in SAMPLERS:
            raise ValueError(f"unknown sampler {s!r}; choose from {SAMPLERS}")
    labels = [q.label for q in scenario.queries] if queries is None else list(queries)
    jobs = [(label, s, base_seed + t) for s in samplers for label in labels for t in range(trials)]
    if workers > 1:
        args = [(scenario.source, scenario.name, *job) for job in jobs]
        with ProcessPoolExecutor(workers) as pool:
            records = list(pool.map(_worker, args))
    else:
        records = [run_trial(scenario, *job) for job in jobs]
    return sorted(records, key=TrialRecord.sort_key)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(round(value, 9))
    return str(value)


def write_csv(records, out=None, timing: bool = False) -> str:
    """Serialize records; wall-clock columns stay empty unless ``timing`` so reruns match byte for byte."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        row = []
        for col in CSV_COLUMNS:
            if col in ("plan_time_s", "fit_time_s") and not timing:
                row.append("")
            else:
                row.append(_cell(getattr(r, col)))
        w.writerow(row)
    text = buf.getvalue()
    if out is not None:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    return text


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def save_paths(records, path) -> None:
    """JSON lines with the raw path and optimized control polygon of each successful trial."""
    with open(path, "w") as fh:
        for r in records:
            if not r.success:
                continue
            fh.write(json.dumps({
                "scenario": r.scenario, "query": r.query, "sampler": r.sampler, "seed": r.seed,
                "path": r.path.tolist(), "control_polygon": r.control_polygon.tolist(),
            }) + "\n")


def load_paths(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def summarize(records) -> list[dict]:
    """Per (query, sampler) aggregates; node means are rounded up."""
    groups: dict[tuple[str, str], list[TrialRecord]] = {}
    for r in records:
        groups.setdefault((r.query, r.sampler), []).append(r)
    rows = []
    for (label, sampler), recs in sorted(groups.items()):
        nodes = np.array([r.extended_nodes for r in recs], dtype=float)
        ok = [r for r in recs if r.success]
        row = {
            "query": label,
            "sampler": sampler,
            "trials": len(recs),
            "success_rate": len(ok) / len(recs),
            "mean_nodes": int(math.ceil(nodes.mean())),
            "median_nodes": float(np.median(nodes)),
            "mean_plan_time_s": float(np.mean([r.plan_time_s for r in recs])),
            "mean_fit_time_s": float(np.mean([r.fit_time_s for r in recs])),
        }
        for key in ("raw_len_rad", "shortcut_len_rad", "raw_nodes", "shortcut_nodes", "dp_nodes", "refined_joints"):
            row[f"mean_{key}"] = float(np.mean([getattr(r, key) for r in ok])) if ok else float("nan")
        rows.append(row)
    return rows


def format_summary(rows) -> str:
    head = (f"{'query':<14}{'sampler':<11}{'ok':>6}{'nodes~':>8}{'median':>8}{'plan s':>9}{'fit s':>8}"
            f"{'raw rad':>9}{'short rad':>10}{'dp nodes':>9}{'refined':>8}")
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(
            f"{r['query']:<14}{r['sampler']:<11}{r['success_rate']:>6.2f}{r['mean_nodes']:>8d}"
            f"{r['median_nodes']:>8.1f}{r['mean_plan_time_s']:>9.3f}{r['mean_fit_time_s']:>8.3f}"
            f"{r['mean_raw_len_rad']:>9.2f}{r['mean_shortcut_len_rad']:>10.2f}{r['mean_dp_nodes']:>9.1f}"
            f"{r['mean_refined_joints']:>8.2f}"
        )
    return "\n".join(lines)


@dataclass
class FloodFillReport:
    cells: tuple[int, ...]
    free: np.ndarray  # bool grid over the joint limits
    labels: np.ndarray  # 0 for blocked cells, component id otherwise
    components: int
    axes: list[np.ndarray]

    def cell_of(self, q) -> tuple[int, ...]:
        return tuple(int(np.argmin(np.abs(ax - v))) for ax, v in zip(self.axes, q))

    def component_of(self, q) -> int:
        return int(self.labels[self.cell_of(q)])

    def connected(self, *configs) -> bool:
        ids = {self.component_of(q) for q in configs}
        return 0 not in ids and len(ids) == 1


def flood_fill_oracle(scene: Scene, resolution_per_joint=200) -> FloodFillReport:
    """Grid the joint box at cell centres, mark free cells, label face-connected components."""
    n = scene.dim
    if n > 3:
        raise ValueError(f"flood fill is limited to 3 joints, scene has {n}")
    cells = (resolution_per_joint,) * n if np.isscalar(resolution_per_joint) else tuple(resolution_per_joint)
    if len(cells) != n:
        raise ValueError("need one cell count per joint")
    axes = []
    for (lo, hi), c in zip(scene.robot.limits, cells):
        width = (hi - lo) / c
        axes.append(lo + width * (np.arange(c) + 0.5))
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    free = configs_are_free(scene, grid).reshape(cells)
    labels, count = ndimage.label(free, structure=ndimage.generate_binary_structure(n, 1))
    return FloodFillReport(cells, free, labels, int(count), axes)
