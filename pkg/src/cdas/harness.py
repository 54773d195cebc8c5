"""Closed-loop experiment driver: bank -> sampler -> learner -> metrics.

Each step selects a batch, rolls every batch problem out against the
synthetic learner, reports pass rates back to the sampler, applies the
learner update, and appends one metrics row.  Runs are deterministic given
the config: the master seed spawns independent streams for bank generation,
the sampler, and the learner, so changing the strategy never perturbs the
bank or the learner's initialization.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import (
    CurriculumSampler,
    DynamicSampler,
    PrioritizedSampler,
    RandomSampler,
)
from .config import ExperimentConfig
from .core import PassRateObservation
from .errors import ConfigError
from .grpo import group_advantages
from .learner import ProblemBank, SyntheticLearner, default_ability, generate_bank, load_bank
from .metrics import (
    METRICS_COLUMNS,
    StepMetrics,
    format_metrics_row,
    summarize_step,
    write_metrics_csv,
)
from .sampling import CdasSampler

CHECKPOINT_VERSION = 1

METRICS_FILE = "metrics.csv"
SUMMARY_FILE = "summary.json"
CHECKPOINT_FILE = "checkpoint.json"
PROBLEMS_FILE = "problems.csv"
BATCHES_FILE = "batches.csv"

_SAMPLER_CLASSES = {
    "cdas": CdasSampler,
    "random": RandomSampler,
    "curriculum": CurriculumSampler,
    "prioritized": PrioritizedSampler,
    "dynamic": DynamicSampler,
}


@dataclass
class RunResult:
    config: ExperimentConfig
    bank_hash: str
    n_problems: int
    rows: list[StepMetrics]
    batches: list[list[str]]
    final_pass_rates: dict[str, float]
    sampler: object
    learner: SyntheticLearner
    completed: bool

    @property
    def warmup_window(self) -> int:
        """Steps treated as warm-up when summarizing (fixed by bank and batch size)."""
        return math.ceil(self.n_problems / self.config.batch_size)

    def summary(self) -> dict:
        post = [r.zero_gradient_fraction for r in self.rows if r.step > self.warmup_window]
        consumed = sum(r.rollout_batches_consumed for r in self.rows)
        out = {
            "strategy": self.config.strategy,
            "seed": self.config.seed,
            "config_hash": self.config.content_hash(),
            "bank_hash": self.bank_hash,
            "n_problems": self.n_problems,
            "completed_steps": len(self.rows),
            "total_steps": self.config.total_steps,
            "completed": self.completed,
            "warmup_window": self.warmup_window,
            "final_ability": self.learner.ability,
            "final_mean_reward": self.rows[-1].mean_reward if self.rows else None,
            "mean_zero_gradient_fraction": (
                sum(r.zero_gradient_fraction for r in self.rows) / len(self.rows)
                if self.rows
                else None
            ),
            "post_warmup_zero_gradient_mean": sum(post) / len(post) if post else None,
            "cumulative_rollout_batches": consumed,
        }
        if isinstance(self.sampler, PrioritizedSampler):
            out["uniform_fallbacks"] = self.sampler.uniform_fallbacks
        return out


@dataclass
class ComparisonResult:
    results: list[RunResult] = field(default_factory=list)

    def summary_rows(self) -> list[dict]:
        return [result.summary() for result in self.results]


def _spawned_rngs(seed: int) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    bank_ss, sampler_ss, learner_ss = np.random.SeedSequence(seed).spawn(3)
    return (
        np.random.default_rng(bank_ss),
        np.random.default_rng(sampler_ss),
        np.random.default_rng(learner_ss),
    )


def _build_bank(config: ExperimentConfig, bank_rng: np.random.Generator) -> ProblemBank:
    if config.bank_path is not None:
        return load_bank(config.bank_path, initial_difficulty=config.initial_difficulty)
    return generate_bank(
        config.n_problems,
        bank_rng,
        mode=config.bank_mode,
        scale=config.bank_scale,
        level_spread=config.bank_level_spread,
        initial_difficulty=config.initial_difficulty,
    )


def make_sampler(config: ExperimentConfig, bank: ProblemBank, rng: np.random.Generator):
    if config.strategy == "cdas":
        return CdasSampler(
            bank.records,
            batch_size=config.batch_size,
            rng=rng,
            symmetric=config.symmetric,
            warmup=config.warmup,
            initial_competence=config.initial_competence,
        )
    if config.strategy == "random":
        return RandomSampler(bank.records, rng=rng)
    if config.strategy == "curriculum":
        return CurriculumSampler(
            bank.records,
            rng=rng,
            switch_step=config.resolved_curriculum_switch_step,
            threshold=config.curriculum_threshold,
        )
    if config.strategy == "prioritized":
        return PrioritizedSampler(
            bank.records, rng=rng, initial_weight=config.prioritized_initial_weight
        )
    if config.strategy == "dynamic":
        return DynamicSampler(
            bank.records,
            rng=rng,
            retry_cap=config.dynamic_retry_cap,
            oversample_factor=config.dynamic_oversample_factor,
        )
    raise ConfigError(f"strategy: unknown strategy {config.strategy!r}")


def sampler_from_state(payload: dict):
    kind = payload.get("strategy")
    cls = _SAMPLER_CLASSES.get(kind)
    if cls is None:
        raise ConfigError(f"checkpoint: unknown sampler strategy {kind!r}")
    return cls.from_state_dict(payload)


@dataclass
class _LiveRun:
    config: ExperimentConfig
    bank: ProblemBank
    sampler: object
    learner: SyntheticLearner
    rows: list[StepMetrics]
    batches: list[list[str]]
    final_pass_rates: dict[str, float]


def _advance(live: _LiveRun, target_step: int) -> None:
    config = live.config
    while live.sampler.step < target_step:
        step = live.sampler.step + 1
        if config.strategy == "dynamic":
            group_cache = {}

            def rollout_fn(problem_id: str) -> PassRateObservation:
                group = live.learner.rollout_group(live.bank.problem(problem_id))
                group_cache[problem_id] = group
                return PassRateObservation(
                    problem_id=problem_id, pass_rate=group.pass_rate, step=step
                )

            batch_ids, consumed = live.sampler.select_and_filter(
                config.batch_size, rollout_fn
            )
            groups = [group_cache[pid] for pid in batch_ids]
        else:
            batch_ids = live.sampler.select_batch(config.batch_size)
            groups = [
                live.learner.rollout_group(live.bank.problem(pid)) for pid in batch_ids
            ]
            consumed = len(batch_ids)
        advantages = [group_advantages(g) for g in groups]
        outcomes = [
            PassRateObservation(problem_id=g.problem_id, pass_rate=g.pass_rate, step=step)
            for g in groups
        ]
        live.sampler.report_outcomes(outcomes)
        live.learner.learn_step(
            [(g.pass_rate, zero) for g, (_, zero) in zip(groups, advantages)]
        )
        live.rows.append(
            summarize_step(groups, live.sampler, live.learner, rollout_batches_consumed=consumed)
        )
        live.batches.append(list(batch_ids))
        for g in groups:
            live.final_pass_rates[g.problem_id] = g.pass_rate


def _result(live: _LiveRun, bank_hash: str) -> RunResult:
    return RunResult(
        config=live.config,
        bank_hash=bank_hash,
        n_problems=len(live.bank),
        rows=live.rows,
        batches=live.batches,
        final_pass_rates=live.final_pass_rates,
        sampler=live.sampler,
        learner=live.learner,
        completed=len(live.rows) >= live.config.total_steps,
    )


def run_experiment(config: ExperimentConfig, stop_after: int | None = None) -> RunResult:
    """Run an experiment from scratch; writes outputs when config.out_dir is set.

    ``stop_after`` truncates the run after that step (checkpoint included), so
    a later ``resume_experiment`` can pick it up.
    """
    config.validate()
    if stop_after is not None and stop_after < 1:
        raise ConfigError(f"stop_after: must be >= 1, got {stop_after}")
    bank_rng, sampler_rng, learner_rng = _spawned_rngs(config.seed)
    bank = _build_bank(config, bank_rng)
    ability = config.ability_init if config.ability_init is not None else default_ability(bank)
    learner = SyntheticLearner(
        ability=ability,
        rng=learner_rng,
        discrimination=config.discrimination,
        learn_rate=config.learn_rate,
        rollouts=config.rollouts,
    )
    sampler = make_sampler(config, bank, sampler_rng)
    live = _LiveRun(
        config=config,
        bank=bank,
        sampler=sampler,
        learner=learner,
        rows=[],
        batches=[],
        final_pass_rates={},
    )
    target = config.total_steps if stop_after is None else min(stop_after, config.total_steps)
    _advance(live, target)
    result = _result(live, bank.content_hash())
    if config.out_dir is not None:
        write_outputs(result, config.out_dir)
    return result


# -- checkpointing ----------------------------------------------------------


def _checkpoint_payload(result: RunResult) -> dict:
    return {
        "format_version": CHECKPOINT_VERSION,
        "config": result.config.to_dict(),
        "config_hash": result.config.content_hash(),
        "bank_hash": result.bank_hash,
        "step": len(result.rows),
        "sampler": result.sampler.state_dict(),
        "learner": result.learner.state_dict(),
        "metrics_rows": [dataclasses.asdict(row) for row in result.rows],
        "batches": result.batches,
        "final_pass_rates": result.final_pass_rates,
    }


def load_checkpoint(path: str | Path) -> dict:
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"checkpoint {path}: invalid JSON ({err})") from err
    version = payload.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise ConfigError(
            f"checkpoint {path}: unsupported format_version {version!r} "
            f"(expected {CHECKPOINT_VERSION})"
        )
    config = ExperimentConfig.from_dict(payload["config"])
    if config.content_hash() != payload.get("config_hash"):
        raise ConfigError(
            f"checkpoint {path}: config hash mismatch; the checkpoint or its "
            f"embedded config was edited"
        )
    return payload


def resume_experiment(
    checkpoint_path: str | Path,
    out_dir: str | Path | None = None,
    stop_after: int | None = None,
) -> RunResult:
    """Continue a checkpointed run to completion (or to ``stop_after``).

    Refuses checkpoints whose config hash does not match their embedded
    config.  Resuming an already-complete run is a no-op with a notice.
    """
    payload = load_checkpoint(checkpoint_path)
    config = ExperimentConfig.from_dict(payload["config"])
    if out_dir is not None:
        config = config.with_overrides(out_dir=str(out_dir))
    config.validate()

    bank_rng, _, _ = _spawned_rngs(config.seed)
    bank = _build_bank(config, bank_rng)
    if bank.content_hash() != payload["bank_hash"]:
        raise ConfigError(
            f"checkpoint {checkpoint_path}: bank hash mismatch; the configured "
            f"bank no longer reproduces the checkpointed one"
        )
    sampler = sampler_from_state(payload["sampler"])
    learner = SyntheticLearner.from_state_dict(payload["learner"])
    rows = [StepMetrics(**row) for row in payload["metrics_rows"]]
    live = _LiveRun(
        config=config,
        bank=bank,
        sampler=sampler,
        learner=learner,
        rows=rows,
        batches=[list(batch) for batch in payload["batches"]],
        final_pass_rates=dict(payload["final_pass_rates"]),
    )

    if len(rows) >= config.total_steps:
        print(
            f"checkpoint {checkpoint_path} already covers all "
            f"{config.total_steps} steps; nothing to resume"
        )
        return _result(live, payload["bank_hash"])

    target = config.total_steps if stop_after is None else min(stop_after, config.total_steps)
    _advance(live, target)
    result = _result(live, payload["bank_hash"])
    if config.out_dir is not None:
        write_outputs(result, config.out_dir)
    return result


# -- output files -------------------------------------------------------------


def write_outputs(result: RunResult, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(
        out / METRICS_FILE, result.rows, result.config.strategy, result.config.seed
    )
    with open(out / BATCHES_FILE, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "problem_ids"])
        for step, batch in enumerate(result.batches, start=1):
            writer.writerow([step, ";".join(batch)])
    with open(out / PROBLEMS_FILE, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["id", "level_tag", "true_difficulty", "t", "difficulty", "final_pass_rate"]
        )
        for record in result.sampler.records.values():
            final = result.final_pass_rates.get(record.id)
            writer.writerow(
                [
                    record.id,
                    record.level_tag if record.level_tag is not None else "",
                    repr(record.true_difficulty) if record.true_difficulty is not None else "",
                    record.t,
                    repr(record.difficulty),
                    repr(final) if final is not None else "",
                ]
            )
    (out / SUMMARY_FILE).write_text(json.dumps(result.summary(), indent=2, sort_keys=True) + "\n")
    (out / CHECKPOINT_FILE).write_text(json.dumps(_checkpoint_payload(result)) + "\n")


# -- comparisons ---------------------------------------------------------------


def compare_runs(configs: list[ExperimentConfig]) -> ComparisonResult:
    """Run several configs that differ only in strategy, on the identical bank."""
    if not configs:
        raise ConfigError("compare: need at least one config")
    reference = configs[0].to_dict()
    for other in configs[1:]:
        candidate = other.to_dict()
        for name in reference:
            if name in ("strategy", "out_dir"):
                continue
            if candidate[name] != reference[name]:
                raise ConfigError(
                    f"compare: configs must be identical apart from strategy; "
                    f"{name} differs ({reference[name]!r} vs {candidate[name]!r})"
                )
    comparison = ComparisonResult()
    for config in configs:
        comparison.results.append(run_experiment(config))
    hashes = {result.bank_hash for result in comparison.results}
    if len(hashes) > 1:
        raise ConfigError(f"compare: bank hash diverged across runs: {sorted(hashes)}")
    return comparison


def compare_strategies(
    config: ExperimentConfig,
    strategies: list[str],
    seeds: list[int] | None = None,
    out_dir: str | Path | None = None,
) -> ComparisonResult:
    """Cross product of strategies and seeds on per-seed identical banks.

    Writes each run under ``<out_dir>/<strategy>_seed<seed>/`` plus a combined
    ``comparison.csv`` (all per-step rows) and ``comparison_summary.csv``
    (one row per run) when ``out_dir`` is given.
    """
    if not strategies:
        raise ConfigError("strategies: need at least one")
    if len(set(strategies)) != len(strategies):
        raise ConfigError(f"strategies: duplicates in {strategies}")
    if seeds is None:
        seeds = [config.seed]
    if not seeds:
        raise ConfigError("seeds: need at least one")
    combined = ComparisonResult()
    for seed in seeds:
        cohort = []
        for strategy in strategies:
            run_dir = (
                str(Path(out_dir) / f"{strategy}_seed{seed}") if out_dir is not None else None
            )
            cohort.append(
                config.with_overrides(strategy=strategy, seed=seed, out_dir=run_dir)
            )
        combined.results.extend(compare_runs(cohort).results)
    if out_dir is not None:
        _write_comparison(combined, Path(out_dir))
    return combined


def _write_comparison(comparison: ComparisonResult, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "comparison.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METRICS_COLUMNS)
        for result in comparison.results:
            for row in result.rows:
                writer.writerow(
                    format_metrics_row(row, result.config.strategy, result.config.seed)
                )
    summary_rows = comparison.summary_rows()
    columns = sorted({key for row in summary_rows for key in row})
    lead = [c for c in ("strategy", "seed") if c in columns]
    columns = lead + [c for c in columns if c not in lead]
    with open(out / "comparison_summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in summary_rows:
            writer.writerow(
                [
                    repr(row[c]) if isinstance(row.get(c), float) else row.get(c, "")
                    for c in columns
                ]
            )
