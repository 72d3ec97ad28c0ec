"""Command-line entry point: plan, optimize, collect-exemplars, fit-gmm, bench, validate."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bench
from .exemplars import collect_exemplars
from .fgmm import Fgmm, em_fit
from .optimizer import optimize
from .planner import SAMPLERS, plan
from .scenario import ScenarioError, load_scenario


def _write_json(obj, out) -> None:
    text = json.dumps(obj, indent=1)
    if out is None:
        print(text)
    else:
        Path(out).write_text(text + "\n")


def cmd_plan(args) -> int:
    sc = load_scenario(args.scenario)
    q = sc.query(args.query)
    priors = None
    if args.priors:
        priors = tuple(Fgmm.from_dict(json.loads(Path(p).read_text())["model"]) for p in args.priors)
    res = plan(sc.scene, q.q_init, q.q_goal, sc.planner, np.random.default_rng(args.seed),
               sampler=args.sampler, priors=priors)
    print(f"{sc.name}/{q.label} sampler={args.sampler} seed={args.seed} success={res.success} "
          f"extended_nodes={res.extended_nodes} iterations={res.iterations} "
          f"plan_time_s={res.planning_time:.3f} fit_time_s={res.fit_time:.3f}", file=sys.stderr)
    _write_json({
        "scenario": sc.name, "query": q.label, "sampler": args.sampler, "seed": args.seed,
        "success": res.success, "extended_nodes": res.extended_nodes, "iterations": res.iterations,
        "path": None if res.path is None else res.path.tolist(),
    }, args.out)
    return 0 if res.success else 1


def cmd_optimize(args) -> int:
    sc = load_scenario(args.scenario)
    data = json.loads(Path(args.path).read_text())
    if not data.get("path"):
        print("path file holds no path (planning failed?)", file=sys.stderr)
        return 2
    traj, m, poly = optimize(sc.scene, np.array(data["path"]), sc.optimizer, np.random.default_rng(args.seed))
    print(f"{'stage':<12}{'nodes':>7}{'length rad':>12}", file=sys.stderr)
    print(f"{'raw':<12}{m.raw_nodes:>7d}{m.raw_len_rad:>12.3f}", file=sys.stderr)
    print(f"{'shortcut':<12}{m.shortcut_nodes:>7d}{m.shortcut_len_rad:>12.3f}", file=sys.stderr)
    print(f"{'simplified':<12}{m.dp_nodes:>7d}{m.dp_len_rad:>12.3f}", file=sys.stderr)
    print(f"refined joints: {m.refined_joints} (unresolved {m.unresolved_joints})", file=sys.stderr)
    _write_json({
        "scenario": sc.name, "metrics": vars(m), "control_points": poly.tolist(),
        "knots": traj.knots.tolist(), "degree": traj.degree, "samples": traj.samples.tolist(),
    }, args.out)
    return 0


def cmd_collect(args) -> int:
    sc = load_scenario(args.scenario)
    q = sc.query(args.query)
    target = q.q_init if args.target == "init" else q.q_goal
    data = collect_exemplars(sc.scene, target, sc.planner.exemplars, np.random.default_rng(args.seed))
    print(f"collected {len(data)} exemplars around q_{args.target} of {sc.name}/{q.label}", file=sys.stderr)
    _write_json({"scenario": sc.name, "query": q.label, "target": target.tolist(),
                 "configs": data.tolist()}, args.out)
    return 0


def cmd_fit(args) -> int:
    data = np.array(json.loads(Path(args.dataset).read_text())["configs"])
    model, trace = em_fit(data, args.K, tol=args.tol, rng=np.random.default_rng(args.seed))
    print(f"K={args.K} EM steps={len(trace) - 1} log-likelihood={trace[-1]:.6f}", file=sys.stderr)
    _write_json({"model": model.to_dict(), "log_likelihood_trace": trace}, args.out)
    return 0


def cmd_bench(args) -> int:
    sc = load_scenario(args.scenario)
    samplers = args.sampler or list(SAMPLERS)
    records = bench.run_benchmark(sc, samplers, args.trials, args.seed, workers=args.workers)
    text = bench.write_csv(records, args.out, timing=args.timing)
    if args.out is None:
        sys.stdout.write(text)
    if args.paths:
        bench.save_paths(records, args.paths)
    print(bench.format_summary(bench.summarize(records)), file=sys.stderr)
    return 0


def cmd_validate(args) -> int:
    try:
        sc = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 1
    print(f"{sc.name}: {sc.scene.dim} joints, {len(sc.scene.grid)} voxels, "
          f"{len(sc.scene.static_boxes)} static boxes, {len(sc.queries)} queries; endpoints free")
    if sc.scene.dim > 3:
        print("flood fill skipped (more than 3 joints)")
        return 0
    report = bench.flood_fill_oracle(sc.scene, args.cells)
    print(f"flood fill {report.cells}: {report.components} free components")
    ok = True
    for q in sc.queries:
        connected = report.connected(q.q_init, q.q_goal)
        ok &= connected
        print(f"  {q.label}: endpoints {'connected' if connected else 'NOT connected'}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="priorplan", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario=True):
        if scenario:
            sp.add_argument("scenario", help="built-in scenario name or path to a scenario JSON file")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", help="output file (default: stdout)")

    sp = sub.add_parser("plan", help="plan one query and write the path")
    common(sp)
    sp.add_argument("--query", help="query label (default: first)")
    sp.add_argument("--sampler", choices=SAMPLERS, default="prior")
    sp.add_argument("--priors", nargs=2, metavar=("INIT_MODEL", "GOAL_MODEL"),
                    help="pre-fitted mixtures from fit-gmm; skips exemplar collection")
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("optimize", help="post-process a planned path")
    common(sp)
    sp.add_argument("path", help="path file written by plan")
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("collect-exemplars", help="sample free configurations around a query endpoint")
    common(sp)
    sp.add_argument("--query")
    sp.add_argument("--target", choices=("init", "goal"), default="goal")
    sp.set_defaults(func=cmd_collect)

    sp = sub.add_parser("fit-gmm", help="fit a Gaussian mixture to an exemplar dataset")
    common(sp, scenario=False)
    sp.add_argument("dataset")
    sp.add_argument("--K", type=int, default=2)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("bench", help="seeded sampler comparison; CSV to --out, summary to stderr")
    common(sp)
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--sampler", action="append", choices=SAMPLERS, help="repeatable; default all")
    sp.add_argument("--timing", action="store_true", help="fill the wall-clock columns (breaks byte-reproducibility)")
    sp.add_argument("--paths", help="also write paths and control polygons as JSON lines")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("validate", help="lint a scenario and run the flood-fill oracle for <= 3 joints")
    sp.add_argument("scenario")
    sp.add_argument("--cells", type=int, default=200)
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
