"""Competence-difficulty alignment sampler.

Selection runs in two phases.  A warm-up phase walks a fixed random
permutation of the bank in batch-size chunks so every problem collects at
least one observation (the final chunk wraps around).  After warm-up each
batch is chosen by alignment |competence - difficulty|: in symmetric mode the
batch takes the best-aligned half from the problems estimated harder than the
current competence and the best-aligned half from the rest, falling back to
the other group when one side runs short; with symmetry off it simply takes
the globally best-aligned problems.  Ties break on ascending problem id.

Outcome reporting is batched: every outcome in a batch is scored against the
pre-batch competence, then competence is recomputed once over the whole bank,
including problems whose estimates are stale.
"""

from __future__ import annotations

import math

import numpy as np

from .core import (
    CompetenceState,
    ProblemRecord,
    alignment,
    instantaneous_difficulty,
    update_competence,
    update_difficulty,
)
from .errors import ConfigError, ConsistencyError

STRATEGY_CDAS = "cdas"


class CdasSampler:
    """Stateful scheduler over a fixed problem bank.

    ``batch_size`` fixes the warm-up schedule: warm-up lasts
    ceil(N / batch_size) steps so the permutation covers the bank.  The
    sampler is a single logical actor; interleave select_batch and
    report_outcomes calls, one batch at a time.
    """

    strategy = STRATEGY_CDAS

    def __init__(
        self,
        records,
        batch_size: int,
        rng: np.random.Generator,
        symmetric: bool = True,
        warmup: bool = True,
        initial_competence: float = 0.0,
    ):
        self._records: dict[str, ProblemRecord] = {}
        for record in records:
            if record.id in self._records:
                raise ConfigError(f"duplicate problem id {record.id}")
            self._records[record.id] = record
        if not self._records:
            raise ConfigError("n_problems: sampler needs at least one problem")
        self._ids = list(self._records)
        self.symmetric = bool(symmetric)
        self.batch_size = int(batch_size)
        self._check_batch_size(self.batch_size)
        self._rng = rng
        order = rng.permutation(len(self._ids))
        self.warmup_order: tuple[str, ...] = tuple(self._ids[i] for i in order)
        self.warmup_steps = math.ceil(len(self._ids) / self.batch_size) if warmup else 0
        self._competence = CompetenceState(competence=initial_competence, step=0)
        self._pending: list[str] | None = None

    # -- read-only views -------------------------------------------------

    @property
    def records(self) -> dict[str, ProblemRecord]:
        return dict(self._records)

    def record(self, problem_id: str) -> ProblemRecord:
        return self._records[problem_id]

    @property
    def step(self) -> int:
        return self._competence.step

    @property
    def competence_value(self) -> float:
        return self._competence.competence

    @property
    def competence_state(self) -> CompetenceState:
        return self._competence

    def in_warmup(self) -> bool:
        return self._competence.step < self.warmup_steps

    # -- selection --------------------------------------------------------

    def _check_batch_size(self, batch_size: int) -> None:
        if batch_size < 1:
            raise ConfigError(f"batch_size: must be >= 1, got {batch_size}")
        if batch_size > len(self._ids):
            raise ConfigError(
                f"batch_size: must not exceed bank size ({batch_size} > {len(self._ids)})"
            )
        if self.symmetric and batch_size % 2 != 0:
            raise ConfigError(
                f"batch_size: symmetric mode needs an even batch, got {batch_size}"
            )

    def select_batch(self, batch_size: int) -> list[str]:
        """Pick the next batch of problem ids; does not consume randomness."""
        self._check_batch_size(batch_size)
        if self.in_warmup():
            start = self._competence.step * batch_size
            n = len(self.warmup_order)
            batch = [self.warmup_order[(start + i) % n] for i in range(batch_size)]
        elif self.symmetric:
            batch = self._select_symmetric(batch_size)
        else:
            scored = sorted(
                (alignment(self._competence.competence, record.difficulty), pid)
                for pid, record in self._records.items()
            )
            batch = [pid for _, pid in scored[:batch_size]]
        self._pending = list(batch)
        return batch

    def _select_symmetric(self, batch_size: int) -> list[str]:
        competence = self._competence.competence
        easier: list[tuple[float, str]] = []
        harder: list[tuple[float, str]] = []
        for pid, record in self._records.items():
            entry = (alignment(competence, record.difficulty), pid)
            if record.difficulty > competence:
                harder.append(entry)
            else:
                easier.append(entry)
        easier.sort()
        harder.sort()
        half = batch_size // 2
        take_easier = min(half, len(easier))
        take_harder = min(half, len(harder))
        # One group short: backfill with the other group's next best-aligned.
        if take_easier < half:
            take_harder = min(batch_size - take_easier, len(harder))
        elif take_harder < half:
            take_easier = min(batch_size - take_harder, len(easier))
        batch = [pid for _, pid in easier[:take_easier]]
        batch += [pid for _, pid in harder[:take_harder]]
        return batch

    # -- outcome reporting -------------------------------------------------

    def report_outcomes(self, outcomes) -> None:
        """Fold a batch of pass-rate observations into the difficulty estimates.

        Every observation is scored against the competence from before this
        batch, so outcome order within the batch cannot matter.  Competence is
        then recomputed once over all problems and the step counter advances.
        """
        outcomes = list(outcomes)
        if self._pending is None:
            raise ConsistencyError("report_outcomes called with no batch outstanding")
        pending = set(self._pending)
        seen: set[str] = set()
        for obs in outcomes:
            if obs.problem_id not in self._records:
                raise ConsistencyError(f"unknown problem id {obs.problem_id}")
            if obs.problem_id not in pending:
                raise ConsistencyError(
                    f"problem {obs.problem_id} was not in the most recent batch"
                )
            if obs.problem_id in seen:
                raise ConsistencyError(f"duplicate outcome for problem {obs.problem_id}")
            seen.add(obs.problem_id)
        pre_competence = self._competence.competence
        for obs in outcomes:
            record = self._records[obs.problem_id]
            d_new = instantaneous_difficulty(pre_competence, record.difficulty, obs.pass_rate)
            self._records[obs.problem_id] = update_difficulty(record, d_new)
        self._competence = CompetenceState(
            competence=update_competence(self._records.values()),
            step=self._competence.step + 1,
        )
        self._pending = None

    # -- serialization ------------------------------------------------------

    def state_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "batch_size": self.batch_size,
            "symmetric": self.symmetric,
            "warmup_steps": self.warmup_steps,
            "warmup_order": list(self.warmup_order),
            "step": self._competence.step,
            "competence": self._competence.competence,
            "pending": list(self._pending) if self._pending is not None else None,
            "rng": self._rng.bit_generator.state,
            "records": [
                [r.id, r.level_tag, r.true_difficulty, r.t, r.difficulty]
                for r in self._records.values()
            ],
        }

    @classmethod
    def from_state_dict(cls, payload: dict) -> "CdasSampler":
        sampler = cls.__new__(cls)
        sampler._records = {
            pid: ProblemRecord(
                id=pid, level_tag=tag, true_difficulty=latent, t=t, difficulty=diff
            )
            for pid, tag, latent, t, diff in payload["records"]
        }
        sampler._ids = list(sampler._records)
        sampler.symmetric = payload["symmetric"]
        sampler.batch_size = payload["batch_size"]
        sampler.warmup_order = tuple(payload["warmup_order"])
        sampler.warmup_steps = payload["warmup_steps"]
        sampler._competence = CompetenceState(
            competence=payload["competence"], step=payload["step"]
        )
        pending = payload["pending"]
        sampler._pending = list(pending) if pending is not None else None
        sampler._rng = np.random.Generator(np.random.PCG64())
        sampler._rng.bit_generator.state = payload["rng"]
        return sampler
