"""Sampling-efficiency table: extended nodes and success rate per sampler.

    python scripts/table1.py [--scenario narrow_passage_2dof] [--trials 20] [--seed 0] [--csv out.csv]
"""

import argparse
import time

import numpy as np

from priorplan.bench import run_benchmark, write_csv
from priorplan.scenario import load_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--scenario", default="narrow_passage_2dof")
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--csv", help="also write the per-trial CSV (with timing columns)")
    args = ap.parse_args()

    sc = load_scenario(args.scenario)
    start = time.perf_counter()
    records = run_benchmark(sc, trials=args.trials, base_seed=args.seed, workers=args.workers)
    elapsed = time.perf_counter() - start
    if args.csv:
        write_csv(records, args.csv, timing=True)

    medians = {}
    print(f"{sc.name}: {args.trials} trials per sampler, seeds {args.seed}..{args.seed + args.trials - 1}")
    print(f"{'sampler':<10}{'success':>9}{'median nodes':>14}{'mean nodes':>12}{'plan s':>9}{'fit s':>8}")
    for sampler in ("uniform", "goal-bias", "prior"):
        recs = [r for r in records if r.sampler == sampler]
        nodes = np.array([r.extended_nodes for r in recs])
        medians[sampler] = float(np.median(nodes))
        print(f"{sampler:<10}{np.mean([r.success for r in recs]):>9.2f}{medians[sampler]:>14.1f}"
              f"{int(np.ceil(nodes.mean())):>12d}{np.mean([r.plan_time_s for r in recs]):>9.3f}"
              f"{np.mean([r.fit_time_s for r in recs]):>8.3f}")
    for base in ("uniform", "goal-bias"):
        print(f"prior vs {base}: median node reduction {1 - medians['prior'] / medians[base]:.1%}")
    print(f"total runtime {elapsed:.1f} s")


if __name__ == "__main__":
    main()
