#!/usr/bin/env python3
"""Run every sampling strategy across seeds and tabulate what the rollouts bought.

Example:
    python3 scripts/compare_strategies.py --seeds 0,1,2 --out runs/compare
"""

import argparse
import sys

from cdas.config import STRATEGIES, ExperimentConfig
from cdas.harness import compare_strategies


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n-problems", type=int, default=2000)
    parser.add_argument("--batch-size", type=int, default=128)
    parser.add_argument("--rollouts", type=int, default=8)
    parser.add_argument("--steps", type=int, default=150)
    parser.add_argument("--seeds", default="0,1,2", help="comma separated run seeds")
    parser.add_argument(
        "--strategies",
        default=",".join(STRATEGIES),
        help=f"comma separated subset of {','.join(STRATEGIES)}",
    )
    parser.add_argument("--out", default=None, help="directory for per-run outputs")
    return parser.parse_args(argv)


def main(argv=None):
    args = parse_args(argv)
    config = ExperimentConfig(
        n_problems=args.n_problems,
        batch_size=args.batch_size,
        rollouts=args.rollouts,
        total_steps=args.steps,
    )
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    comparison = compare_strategies(config, strategies, seeds=seeds, out_dir=args.out)

    by_strategy = {s: [] for s in strategies}
    for result in comparison.results:
        by_strategy[result.config.strategy].append(result.summary())

    header = (
        f"{'strategy':<12} {'final ability':>14} {'zero-grad (post warm-up)':>25} "
        f"{'rollout batches':>16}"
    )
    print(header)
    print("-" * len(header))
    for strategy in strategies:
        rows = by_strategy[strategy]
        ability = sum(r["final_ability"] for r in rows) / len(rows)
        zero = sum(r["post_warmup_zero_gradient_mean"] for r in rows) / len(rows)
        batches = sum(r["cumulative_rollout_batches"] for r in rows) / len(rows)
        print(f"{strategy:<12} {ability:>14.4f} {zero:>25.4f} {batches:>16.0f}")
    if args.out:
        print(f"\nper-run outputs and comparison CSVs written under {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
