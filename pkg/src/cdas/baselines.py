"""Baseline problem-selection strategies.

All baselines share the select/report contract of the alignment sampler: pick
a batch of ids, then record the observed pass rates.  None of them maintain a
competence or difficulty model; they only remember the latest pass rate per
problem.
"""

from __future__ import annotations

import math

import numpy as np

from .core import ProblemRecord
from .errors import ConfigError, ConsistencyError, RolloutBudgetError

STRATEGY_RANDOM = "random"
STRATEGY_CURRICULUM = "curriculum"
STRATEGY_PRIORITIZED = "prioritized"
STRATEGY_DYNAMIC = "dynamic"


class BaselineSampler:
    strategy = "baseline"
    competence_value = None

    def __init__(self, records, rng: np.random.Generator):
        self._records: dict[str, ProblemRecord] = {}
        for record in records:
            if record.id in self._records:
                raise ConfigError(f"duplicate problem id {record.id}")
            self._records[record.id] = record
        if not self._records:
            raise ConfigError("n_problems: sampler needs at least one problem")
        self._ids = list(self._records)
        self._rng = rng
        self._step = 0
        self.last_pass_rate: dict[str, float] = {}

    @property
    def records(self) -> dict[str, ProblemRecord]:
        return dict(self._records)

    def record(self, problem_id: str) -> ProblemRecord:
        return self._records[problem_id]

    @property
    def step(self) -> int:
        return self._step

    def _check_batch_size(self, batch_size: int) -> None:
        if batch_size < 1:
            raise ConfigError(f"batch_size: must be >= 1, got {batch_size}")
        if batch_size > len(self._ids):
            raise ConfigError(
                f"batch_size: must not exceed bank size ({batch_size} > {len(self._ids)})"
            )

    def _uniform_batch(self, batch_size: int) -> list[str]:
        chosen = self._rng.choice(len(self._ids), size=batch_size, replace=False)
        return [self._ids[i] for i in chosen]

    def report_outcomes(self, outcomes) -> None:
        """Record latest pass rates; later duplicates in one batch win."""
        for obs in outcomes:
            if obs.problem_id not in self._records:
                raise ConsistencyError(f"unknown problem id {obs.problem_id}")
            self.last_pass_rate[obs.problem_id] = obs.pass_rate
        self._step += 1

    def _base_state(self) -> dict:
        return {
            "strategy": self.strategy,
            "step": self._step,
            "last_pass_rate": dict(self.last_pass_rate),
            "rng": self._rng.bit_generator.state,
            "records": [
                [r.id, r.level_tag, r.true_difficulty, r.t, r.difficulty]
                for r in self._records.values()
            ],
        }

    def _restore_base(self, payload: dict) -> None:
        self._step = payload["step"]
        self.last_pass_rate = dict(payload["last_pass_rate"])
        self._rng.bit_generator.state = payload["rng"]

    @classmethod
    def _records_from_state(cls, payload: dict) -> list[ProblemRecord]:
        return [
            ProblemRecord(id=pid, level_tag=tag, true_difficulty=latent, t=t, difficulty=diff)
            for pid, tag, latent, t, diff in payload["records"]
        ]


class RandomSampler(BaselineSampler):
    """Uniform sampling without replacement within each batch."""

    strategy = STRATEGY_RANDOM

    def select_batch(self, batch_size: int) -> list[str]:
        self._check_batch_size(batch_size)
        return self._uniform_batch(batch_size)

    def state_dict(self) -> dict:
        return self._base_state()

    @classmethod
    def from_state_dict(cls, payload: dict) -> "RandomSampler":
        sampler = cls(cls._records_from_state(payload), rng=np.random.default_rng())
        sampler._restore_base(payload)
        return sampler


class CurriculumSampler(BaselineSampler):
    """Uniform sampling that switches to high-level problems at a fixed step."""

    strategy = STRATEGY_CURRICULUM

    def __init__(self, records, rng: np.random.Generator, switch_step: int, threshold: int = 4):
        super().__init__(records, rng)
        if switch_step < 0:
            raise ConfigError(f"curriculum_switch_step: must be >= 0, got {switch_step}")
        if threshold not in (1, 2, 3, 4, 5):
            raise ConfigError(f"curriculum_threshold: must be in 1..5, got {threshold}")
        untagged = [pid for pid, record in self._records.items() if record.level_tag is None]
        if untagged:
            raise ConfigError(
                f"curriculum needs level tags on every problem; missing on {untagged[0]} "
                f"and {len(untagged) - 1} others"
            )
        self.switch_step = switch_step
        self.threshold = threshold
        self._eligible = [
            pid for pid, record in self._records.items() if record.level_tag >= threshold
        ]

    def select_batch(self, batch_size: int) -> list[str]:
        self._check_batch_size(batch_size)
        if self._step < self.switch_step:
            return self._uniform_batch(batch_size)
        if batch_size > len(self._eligible):
            raise ConfigError(
                f"batch_size: only {len(self._eligible)} problems at level >= "
                f"{self.threshold}, need {batch_size}"
            )
        chosen = self._rng.choice(len(self._eligible), size=batch_size, replace=False)
        return [self._eligible[i] for i in chosen]

    def state_dict(self) -> dict:
        state = self._base_state()
        state["switch_step"] = self.switch_step
        state["threshold"] = self.threshold
        return state

    @classmethod
    def from_state_dict(cls, payload: dict) -> "CurriculumSampler":
        sampler = cls(
            cls._records_from_state(payload),
            rng=np.random.default_rng(),
            switch_step=payload["switch_step"],
            threshold=payload["threshold"],
        )
        sampler._restore_base(payload)
        return sampler


class PrioritizedSampler(BaselineSampler):
    """Weighted sampling by failure rate: weight 1 - latest pass rate.

    Unseen problems carry ``initial_weight``.  Batches are drawn sequentially
    without replacement, renormalizing after each draw, so a zero-weight
    problem is never taken while positive-weight problems remain.  If no
    positive weight remains the rest of the batch falls back to uniform and
    the ``uniform_fallbacks`` counter increments.
    """

    strategy = STRATEGY_PRIORITIZED

    def __init__(self, records, rng: np.random.Generator, initial_weight: float = 1.0):
        super().__init__(records, rng)
        if not (0.0 <= initial_weight <= 1.0):
            raise ConfigError(
                f"prioritized_initial_weight: must be in [0, 1], got {initial_weight}"
            )
        self.initial_weight = initial_weight
        self.uniform_fallbacks = 0

    def _weight(self, problem_id: str) -> float:
        rate = self.last_pass_rate.get(problem_id)
        if rate is None:
            return self.initial_weight
        return 1.0 - rate

    def select_batch(self, batch_size: int) -> list[str]:
        self._check_batch_size(batch_size)
        remaining = list(range(len(self._ids)))
        weights = np.array([self._weight(pid) for pid in self._ids])
        picks: list[int] = []
        fell_back = False
        for _ in range(batch_size):
            total = float(weights.sum())
            if total <= 0.0:
                j = int(self._rng.integers(len(remaining)))
                fell_back = True
            else:
                j = int(self._rng.choice(len(remaining), p=weights / total))
            picks.append(remaining[j])
            remaining.pop(j)
            weights = np.delete(weights, j)
        if fell_back:
            self.uniform_fallbacks += 1
        return [self._ids[i] for i in picks]

    def state_dict(self) -> dict:
        state = self._base_state()
        state["initial_weight"] = self.initial_weight
        state["uniform_fallbacks"] = self.uniform_fallbacks
        return state

    @classmethod
    def from_state_dict(cls, payload: dict) -> "PrioritizedSampler":
        sampler = cls(
            cls._records_from_state(payload),
            rng=np.random.default_rng(),
            initial_weight=payload["initial_weight"],
        )
        sampler._restore_base(payload)
        sampler.uniform_fallbacks = payload["uniform_fallbacks"]
        return sampler


class DynamicSampler(BaselineSampler):
    """Oversample-and-filter selection keeping only problems with interior pass rates.

    Candidates are drawn uniformly in rounds and rolled out one at a time;
    those with pass rate exactly 0 or 1 are discarded.  Drawing stops once the
    batch is full or ``retry_cap`` rounds are spent.  A capped batch is padded
    with the most recently filtered candidates so batch size is preserved.
    """

    strategy = STRATEGY_DYNAMIC

    def __init__(
        self,
        records,
        rng: np.random.Generator,
        retry_cap: int = 10,
        oversample_factor: float = 1.0,
    ):
        super().__init__(records, rng)
        if retry_cap < 1:
            raise ConfigError(f"dynamic_retry_cap: must be >= 1, got {retry_cap}")
        if oversample_factor < 1.0:
            raise ConfigError(
                f"dynamic_oversample_factor: must be >= 1, got {oversample_factor}"
            )
        self.retry_cap = retry_cap
        self.oversample_factor = oversample_factor

    def select_and_filter(self, batch_size: int, rollout_fn) -> tuple[list[str], int]:
        """Build a batch of interior-pass-rate problems.

        ``rollout_fn`` maps a problem id to a PassRateObservation and is
        invoked once per candidate; the second return value counts those
        invocations (the rollout budget the batch consumed).

        Raises:
            RolloutBudgetError: retry cap spent with nothing keepable at all.
        """
        self._check_batch_size(batch_size)
        round_size = max(batch_size, math.ceil(self.oversample_factor * batch_size))
        kept: list[str] = []
        filtered: list[str] = []
        tried: set[str] = set()
        consumed = 0
        rounds = 0
        while len(kept) < batch_size and rounds < self.retry_cap:
            pool = [pid for pid in self._ids if pid not in tried]
            if not pool:
                break
            rounds += 1
            draw = self._rng.choice(len(pool), size=min(round_size, len(pool)), replace=False)
            for i in draw:
                pid = pool[i]
                tried.add(pid)
                obs = rollout_fn(pid)
                consumed += 1
                if obs.problem_id != pid:
                    raise ConsistencyError(
                        f"rollout_fn returned observation for {obs.problem_id}, expected {pid}"
                    )
                if 0.0 < obs.pass_rate < 1.0:
                    kept.append(pid)
                else:
                    filtered.append(pid)
                if len(kept) == batch_size:
                    break
        if len(kept) < batch_size:
            if not kept:
                raise RolloutBudgetError(
                    f"no problem with interior pass rate found in {rounds} rounds "
                    f"({consumed} rollouts)"
                )
            deficit = batch_size - len(kept)
            kept = kept + filtered[-deficit:]
        return kept, consumed

    def state_dict(self) -> dict:
        state = self._base_state()
        state["retry_cap"] = self.retry_cap
        state["oversample_factor"] = self.oversample_factor
        return state

    @classmethod
    def from_state_dict(cls, payload: dict) -> "DynamicSampler":
        sampler = cls(
            cls._records_from_state(payload),
            rng=np.random.default_rng(),
            retry_cap=payload["retry_cap"],
            oversample_factor=payload["oversample_factor"],
        )
        sampler._restore_base(payload)
        return sampler
