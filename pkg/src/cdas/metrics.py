"""Per-step metrics, end-of-run tables, and the metrics CSV schema."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .grpo import RolloutGroup, group_advantages

METRICS_COLUMNS = [
    "step",
    "strategy",
    "seed",
    "mean_reward",
    "zero_gradient_fraction",
    "rollout_batches_consumed",
    "competence",
    "mean_sampled_difficulty",
    "learner_ability",
]


@dataclass(frozen=True, slots=True)
class StepMetrics:
    """One scheduler step's aggregates.

    ``competence`` and ``mean_sampled_difficulty`` are None for strategies
    that do not model difficulty; ``learner_ability`` is the simulated
    learner's ability after the step's update.
    """

    step: int
    mean_reward: float
    zero_gradient_fraction: float
    rollout_batches_consumed: int
    competence: float | None
    mean_sampled_difficulty: float | None
    learner_ability: float


def summarize_step(
    groups: list[RolloutGroup],
    sampler,
    learner,
    rollout_batches_consumed: int | None = None,
) -> StepMetrics:
    """Aggregate one completed step.

    Call after outcomes were reported and the learner updated: competence and
    difficulty are read post-update, ability post-learn.  ``groups`` is the
    batch actually trained on; ``rollout_batches_consumed`` defaults to one
    rollout group per batch problem.
    """
    if not groups:
        raise ValueError("summarize_step requires at least one rollout group")
    mean_reward = sum(g.pass_rate for g in groups) / len(groups)
    zero_count = sum(1 for g in groups if group_advantages(g)[1])
    competence = sampler.competence_value
    if competence is None:
        mean_difficulty = None
    else:
        mean_difficulty = sum(
            sampler.record(g.problem_id).difficulty for g in groups
        ) / len(groups)
    return StepMetrics(
        step=sampler.step,
        mean_reward=mean_reward,
        zero_gradient_fraction=zero_count / len(groups),
        rollout_batches_consumed=(
            rollout_batches_consumed if rollout_batches_consumed is not None else len(groups)
        ),
        competence=competence,
        mean_sampled_difficulty=mean_difficulty,
        learner_ability=learner.ability,
    )


def difficulty_passrate_table(records, final_pass_rates: dict[str, float]) -> list[tuple]:
    """Rows (id, t, difficulty, final pass rate) for every sampled problem.

    Problems with t == 0 never produced an observation and are excluded.
    """
    rows = []
    for record in records:
        if record.t == 0:
            continue
        if record.id not in final_pass_rates:
            raise ValueError(f"problem {record.id} has t={record.t} but no final pass rate")
        rows.append((record.id, record.t, record.difficulty, final_pass_rates[record.id]))
    return rows


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_metrics_row(row: StepMetrics, strategy: str, seed: int) -> list[str]:
    return [
        str(row.step),
        strategy,
        str(seed),
        _cell(row.mean_reward),
        _cell(row.zero_gradient_fraction),
        str(row.rollout_batches_consumed),
        _cell(row.competence),
        _cell(row.mean_sampled_difficulty),
        _cell(row.learner_ability),
    ]


def write_metrics_csv(path: str | Path, rows: list[StepMetrics], strategy: str, seed: int) -> None:
    """Write the per-step metrics CSV; floats use shortest round-trip repr."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METRICS_COLUMNS)
        for row in rows:
            writer.writerow(format_metrics_row(row, strategy, seed))


def read_metrics_csv(path: str | Path) -> list[dict]:
    """Parse a metrics CSV back into dicts with typed fields ('' -> None)."""
    out = []
    with open(path, newline="") as fh:
        for raw in csv.DictReader(fh):
            out.append(
                {
                    "step": int(raw["step"]),
                    "strategy": raw["strategy"],
                    "seed": int(raw["seed"]),
                    "mean_reward": float(raw["mean_reward"]),
                    "zero_gradient_fraction": float(raw["zero_gradient_fraction"]),
                    "rollout_batches_consumed": int(raw["rollout_batches_consumed"]),
                    "competence": float(raw["competence"]) if raw["competence"] else None,
                    "mean_sampled_difficulty": (
                        float(raw["mean_sampled_difficulty"])
                        if raw["mean_sampled_difficulty"]
                        else None
                    ),
                    "learner_ability": float(raw["learner_ability"]),
                }
            )
    return out
