"""Command-line interface: run, compare, resume, fixed-point, bank."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .config import BANK_MODES, STRATEGIES, ExperimentConfig
from .errors import ConfigError, ConsistencyError, ConvergenceError, RolloutBudgetError
from .fixed_point import EquilibriumProblem, solve, write_trajectory_csv
from .harness import (
    _spawned_rngs,
    compare_strategies,
    resume_experiment,
    run_experiment,
)
from .learner import generate_bank, load_bank, save_bank

_CONFIG_FLAG_FIELDS = [
    "n_problems",
    "batch_size",
    "rollouts",
    "total_steps",
    "strategy",
    "symmetric",
    "warmup",
    "seed",
    "discrimination",
    "learn_rate",
    "ability_init",
    "bank_mode",
    "bank_scale",
    "bank_level_spread",
    "bank_path",
    "initial_difficulty",
    "initial_competence",
    "curriculum_switch_step",
    "curriculum_threshold",
    "prioritized_initial_weight",
    "dynamic_retry_cap",
    "dynamic_oversample_factor",
    "out_dir",
]


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="JSON config file to start from")
    parser.add_argument("--n-problems", type=int)
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--rollouts", type=int)
    parser.add_argument("--steps", "--total-steps", dest="total_steps", type=int)
    parser.add_argument("--strategy", choices=STRATEGIES)
    parser.add_argument("--symmetric", action=argparse.BooleanOptionalAction, default=None)
    parser.add_argument("--warmup", action=argparse.BooleanOptionalAction, default=None)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--discrimination", type=float)
    parser.add_argument("--learn-rate", type=float)
    parser.add_argument("--ability-init", type=float)
    parser.add_argument("--bank-mode", choices=BANK_MODES)
    parser.add_argument("--bank-scale", type=float)
    parser.add_argument("--bank-level-spread", type=float)
    parser.add_argument("--bank-path")
    parser.add_argument("--initial-difficulty", type=float)
    parser.add_argument("--initial-competence", type=float)
    parser.add_argument("--curriculum-switch-step", type=int)
    parser.add_argument("--curriculum-threshold", type=int)
    parser.add_argument("--prioritized-initial-weight", type=float)
    parser.add_argument("--dynamic-retry-cap", type=int)
    parser.add_argument("--dynamic-oversample-factor", type=float)
    parser.add_argument("--out", "--out-dir", dest="out_dir", metavar="DIR")


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    overrides = {name: getattr(args, name) for name in _CONFIG_FLAG_FIELDS}
    return config.with_overrides(**overrides)


def _cmd_run(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    result = run_experiment(config, stop_after=args.stop_after)
    summary = result.summary()
    print(
        f"{summary['strategy']} seed={summary['seed']}: "
        f"{summary['completed_steps']}/{summary['total_steps']} steps, "
        f"final ability {summary['final_ability']:.4f}, "
        f"rollout batches {summary['cumulative_rollout_batches']}"
    )
    if config.out_dir is not None:
        print(f"outputs in {config.out_dir}")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    if args.seeds is not None:
        try:
            seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
        except ValueError as err:
            raise ConfigError(f"seeds: expected comma-separated integers ({err})") from err
    else:
        seeds = [config.seed]
    out_dir = config.out_dir
    base = dataclasses.replace(config, out_dir=None)
    comparison = compare_strategies(base, strategies, seeds=seeds, out_dir=out_dir)
    for row in comparison.summary_rows():
        post = row["post_warmup_zero_gradient_mean"]
        post_text = f"{post:.4f}" if post is not None else "n/a"
        print(
            f"{row['strategy']:<12} seed={row['seed']:<4} "
            f"ability={row['final_ability']:.4f} "
            f"post_warmup_zero_grad={post_text} "
            f"rollout_batches={row['cumulative_rollout_batches']}"
        )
    if out_dir is not None:
        print(f"outputs in {out_dir}")
    return 0


def _cmd_resume(args: argparse.Namespace) -> int:
    result = resume_experiment(args.checkpoint, out_dir=args.out_dir, stop_after=args.stop_after)
    summary = result.summary()
    print(
        f"{summary['strategy']} seed={summary['seed']}: "
        f"{summary['completed_steps']}/{summary['total_steps']} steps, "
        f"final ability {summary['final_ability']:.4f}"
    )
    return 0


def _load_s_star(path: str) -> np.ndarray:
    text = Path(path).read_text()
    if path.endswith(".json"):
        payload = json.loads(text)
        if not isinstance(payload, list):
            raise ConfigError(f"s_star file {path}: expected a JSON list of pass rates")
        values = payload
    else:
        try:
            values = [float(line) for line in text.split() if line.strip()]
        except ValueError as err:
            raise ConfigError(f"s_star file {path}: {err}") from err
    if not values:
        raise ConfigError(f"s_star file {path}: no values found")
    return np.asarray(values, dtype=float)


def _cmd_fixed_point(args: argparse.Namespace) -> int:
    s_star = _load_s_star(args.s_star)
    if args.init_seed is not None:
        rng = np.random.default_rng(args.init_seed)
        problem = EquilibriumProblem(
            s_star=s_star,
            init_d=rng.uniform(-5.0, 5.0, size=s_star.size),
            init_c=float(rng.uniform(-5.0, 5.0)),
        )
    else:
        problem = EquilibriumProblem(s_star=s_star)
    try:
        solution = solve(problem, tolerance=args.tolerance, max_iters=args.max_iters)
    except ValueError as err:
        raise ConfigError(str(err)) from err
    worst = max(solution.contraction_ratios) if solution.contraction_ratios else 0.0
    print(
        f"converged in {solution.iterations} iterations: "
        f"c*={solution.c_star!r}, residual={solution.final_residual:.3e}, "
        f"max contraction ratio={worst:.4f}"
    )
    if args.out is not None:
        payload = {
            "c_star": solution.c_star,
            "d_star": solution.d_star.tolist(),
            "iterations": solution.iterations,
            "final_residual": solution.final_residual,
            "contraction_ratios": solution.contraction_ratios,
        }
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
        print(f"solution written to {args.out}")
    if args.trajectory_out is not None:
        write_trajectory_csv(solution.trajectory, args.trajectory_out)
        print(f"trajectory written to {args.trajectory_out}")
    return 0


def _cmd_bank_generate(args: argparse.Namespace) -> int:
    bank_rng, _, _ = _spawned_rngs(args.seed)
    bank = generate_bank(
        args.n,
        bank_rng,
        mode=args.mode,
        scale=args.scale,
        level_spread=args.level_spread,
    )
    save_bank(bank, args.out)
    print(f"bank of {len(bank)} problems written to {args.out} (hash {bank.content_hash()[:12]})")
    return 0


def _cmd_bank_inspect(args: argparse.Namespace) -> int:
    bank = load_bank(args.path)
    latent = bank.true_difficulties()
    levels = {}
    for record in bank.records:
        levels[record.level_tag] = levels.get(record.level_tag, 0) + 1
    print(f"bank {args.path}: {len(bank)} problems, mode={bank.mode}")
    print(f"hash: {bank.content_hash()}")
    print(
        f"true difficulty: min={latent.min():.4f} mean={latent.mean():.4f} "
        f"max={latent.max():.4f}"
    )
    print("levels: " + ", ".join(f"{tag}: {levels[tag]}" for tag in sorted(levels)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdas",
        description="Competence-difficulty alignment sampling experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scheduling experiment")
    _add_config_flags(run_p)
    run_p.add_argument(
        "--stop-after",
        type=int,
        help="stop after this step and checkpoint (resumable)",
    )
    run_p.set_defaults(func=_cmd_run)

    cmp_p = sub.add_parser("compare", help="run several strategies on identical banks")
    _add_config_flags(cmp_p)
    cmp_p.add_argument(
        "--strategies",
        default="cdas,random",
        help="comma-separated strategy names (default: cdas,random)",
    )
    cmp_p.add_argument("--seeds", help="comma-separated seeds (default: the single --seed)")
    cmp_p.set_defaults(func=_cmd_compare)

    res_p = sub.add_parser("resume", help="continue a checkpointed run")
    res_p.add_argument("checkpoint", help="path to checkpoint.json")
    res_p.add_argument("--out", "--out-dir", dest="out_dir", metavar="DIR")
    res_p.add_argument("--stop-after", type=int)
    res_p.set_defaults(func=_cmd_resume)

    fp_p = sub.add_parser("fixed-point", help="solve the difficulty/competence equilibrium")
    fp_p.add_argument("--s-star", required=True, help="pass-rate vector: .json list or one value per line")
    fp_p.add_argument("--tolerance", type=float, default=1e-10)
    fp_p.add_argument("--max-iters", type=int, default=200)
    fp_p.add_argument("--init-seed", type=int, help="random start in [-5, 5] instead of zeros")
    fp_p.add_argument("--out", metavar="PATH", help="write the solution as JSON")
    fp_p.add_argument("--trajectory-out", metavar="PATH", help="write per-iteration deltas as CSV")
    fp_p.set_defaults(func=_cmd_fixed_point)

    bank_p = sub.add_parser("bank", help="generate or inspect problem banks")
    bank_sub = bank_p.add_subparsers(dest="bank_command", required=True)
    gen_p = bank_sub.add_parser("generate", help="draw a bank and write it as JSON")
    gen_p.add_argument("--n", type=int, default=2000)
    gen_p.add_argument("--seed", type=int, default=0)
    gen_p.add_argument("--mode", choices=BANK_MODES, default="normal")
    gen_p.add_argument("--scale", type=float, default=1.0)
    gen_p.add_argument("--level-spread", type=float, default=2.0)
    gen_p.add_argument("--out", required=True, metavar="PATH")
    gen_p.set_defaults(func=_cmd_bank_generate)
    ins_p = bank_sub.add_parser("inspect", help="summarize a bank file")
    ins_p.add_argument("path")
    ins_p.set_defaults(func=_cmd_bank_inspect)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (ConvergenceError, RolloutBudgetError, ConsistencyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except OSError as err:
        target = err.filename if err.filename else ""
        print(f"error: {target}: {err.strerror or err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
