"""Post-processing table: waypoint count and L1 length after each optimizer stage.

    python scripts/table2.py [--scenario narrow_passage_2dof] [--sampler prior] [--trials 20] [--seed 0]
"""

import argparse

import numpy as np

from priorplan.bench import run_benchmark
from priorplan.scenario import load_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--scenario", default="narrow_passage_2dof")
    ap.add_argument("--sampler", default="prior", choices=("prior", "uniform", "goal-bias"))
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    sc = load_scenario(args.scenario)
    recs = [r for r in run_benchmark(sc, [args.sampler], args.trials, args.seed) if r.success]
    if not recs:
        raise SystemExit("no successful trials")
    raw_n, short_n, dp_n = (np.mean([getattr(r, k) for r in recs]) for k in ("raw_nodes", "shortcut_nodes", "dp_nodes"))
    raw_l, short_l = (np.mean([getattr(r, k) for r in recs]) for k in ("raw_len_rad", "shortcut_len_rad"))
    print(f"{sc.name}, sampler {args.sampler}: {len(recs)}/{args.trials} successful paths")
    print(f"{'stage':<14}{'nodes':>8}{'length rad':>12}")
    print(f"{'raw':<14}{raw_n:>8.1f}{raw_l:>12.3f}")
    print(f"{'shortcut':<14}{short_n:>8.1f}{short_l:>12.3f}")
    print(f"{'simplified':<14}{dp_n:>8.1f}{'-':>12}")
    print(f"shortcut length reduction {1 - short_l / raw_l:.1%}; simplification node reduction {1 - dp_n / short_n:.1%}")
    print(f"joints refined per path {np.mean([r.refined_joints for r in recs]):.2f}")


if __name__ == "__main__":
    main()
