"""Alignment sampler: warm-up coverage, symmetric selection, batched updates."""

import math

import numpy as np
import pytest

from cdas.core import PassRateObservation, ProblemRecord, alignment
from cdas.errors import ConfigError, ConsistencyError
from cdas.sampling import CdasSampler


def _records(difficulties, t=1):
    return [ProblemRecord(id=pid, t=t, difficulty=d) for pid, d in difficulties.items()]


def _fresh(difficulties, batch_size, seed=0, **kwargs):
    return CdasSampler(
        records=_records(difficulties, t=kwargs.pop("t", 1)),
        batch_size=batch_size,
        rng=np.random.default_rng(seed),
        **kwargs,
    )


SIX_PROBLEMS = {
    "x1": -0.3,
    "x2": -0.1,
    "x3": 0.05,
    "x4": 0.2,
    "x5": 0.4,
    "x6": -0.6,
}


class TestSymmetricSelection:
    def test_six_problem_batch_splits_by_alignment(self):
        sampler = _fresh(SIX_PROBLEMS, batch_size=4, warmup=False)
        batch = sampler.select_batch(4)
        assert set(batch) == {"x1", "x2", "x3", "x4"}
        easier = {pid for pid in batch if SIX_PROBLEMS[pid] <= 0.0}
        harder = {pid for pid in batch if SIX_PROBLEMS[pid] > 0.0}
        assert easier == {"x2", "x1"}
        assert harder == {"x3", "x4"}

    def test_bank_sized_batch_returns_everything(self):
        difficulties = {"a": -0.2, "b": -0.1, "c": 0.1, "d": 0.2}
        sampler = _fresh(difficulties, batch_size=4, warmup=False)
        assert set(sampler.select_batch(4)) == set(difficulties)

    def test_boundary_difficulty_counts_as_easier(self):
        sampler = _fresh({"a": 0.0, "b": 0.1, "c": 0.5}, batch_size=2, warmup=False)
        batch = sampler.select_batch(2)
        assert set(batch) == {"a", "b"}

    def test_backfill_when_everything_is_harder(self):
        sampler = _fresh(
            SIX_PROBLEMS, batch_size=4, warmup=False, initial_competence=-1.0
        )
        batch = sampler.select_batch(4)
        scored = sorted((alignment(-1.0, d), pid) for pid, d in SIX_PROBLEMS.items())
        assert set(batch) == {pid for _, pid in scored[:4]}

    def test_backfill_when_everything_is_easier(self):
        sampler = _fresh(
            SIX_PROBLEMS, batch_size=4, warmup=False, initial_competence=1.0
        )
        batch = sampler.select_batch(4)
        scored = sorted((alignment(1.0, d), pid) for pid, d in SIX_PROBLEMS.items())
        assert set(batch) == {pid for _, pid in scored[:4]}

    def test_alignment_ties_break_on_ascending_id(self):
        sampler = _fresh(
            {"m": 0.1, "k": 0.1, "z": 0.1, "q": -0.1, "r": -0.1, "s": -0.2},
            batch_size=4,
            warmup=False,
        )
        batch = sampler.select_batch(4)
        assert set(batch) == {"q", "r", "k", "m"}


class TestNonSymmetricSelection:
    def test_takes_globally_lowest_alignment(self):
        sampler = _fresh(SIX_PROBLEMS, batch_size=4, warmup=False, symmetric=False)
        assert set(sampler.select_batch(4)) == {"x3", "x2", "x4", "x1"}

    def test_odd_batch_allowed(self):
        sampler = _fresh(SIX_PROBLEMS, batch_size=3, warmup=False, symmetric=False)
        assert set(sampler.select_batch(3)) == {"x3", "x2", "x4"}


class TestWarmup:
    def test_window_is_ceiling_of_bank_over_batch(self):
        assert _fresh(SIX_PROBLEMS, batch_size=4).warmup_steps == 2
        assert _fresh(SIX_PROBLEMS, batch_size=2).warmup_steps == 3
        assert _fresh(SIX_PROBLEMS, batch_size=6).warmup_steps == 1

    def test_disabled_warmup_selects_by_alignment_immediately(self):
        sampler = _fresh(SIX_PROBLEMS, batch_size=4, warmup=False)
        assert sampler.warmup_steps == 0
        assert not sampler.in_warmup()

    def test_chunks_walk_the_permutation_and_wrap(self):
        difficulties = {f"p{i}": 0.0 for i in range(5)}
        sampler = _fresh(difficulties, batch_size=2, t=0)
        order = sampler.warmup_order
        expected = [
            [order[0], order[1]],
            [order[2], order[3]],
            [order[4], order[0]],
        ]
        for want in expected:
            assert sampler.in_warmup()
            batch = sampler.select_batch(2)
            assert batch == want
            sampler.report_outcomes(
                [PassRateObservation(problem_id=pid, pass_rate=0.5) for pid in batch]
            )
        assert not sampler.in_warmup()
        counts = sorted(record.t for record in sampler.records.values())
        assert counts == [1, 1, 1, 1, 2]

    def test_full_scale_window_and_coverage(self):
        n, batch_size = 7500, 1024
        difficulties = {f"p{i:05d}": 0.0 for i in range(n)}
        sampler = _fresh(difficulties, batch_size=batch_size, t=0, seed=17)
        assert sampler.warmup_steps == 8
        rng = np.random.default_rng(99)
        for _ in range(sampler.warmup_steps):
            batch = sampler.select_batch(batch_size)
            sampler.report_outcomes(
                PassRateObservation(problem_id=pid, pass_rate=float(rng.integers(0, 5)) / 4.0)
                for pid in batch
            )
        assert not sampler.in_warmup()
        assert min(record.t for record in sampler.records.values()) >= 1

    def test_reselection_before_report_is_stable(self):
        sampler = _fresh(SIX_PROBLEMS, batch_size=2, t=0)
        assert sampler.select_batch(2) == sampler.select_batch(2)


class TestReportOutcomes:
    def test_single_pass_outcome_from_fresh_state(self):
        difficulties = {f"x{i}": 0.0 for i in range(1, 6)}
        sampler = _fresh(difficulties, batch_size=1, t=0, warmup=False, symmetric=False)
        batch = sampler.select_batch(1)
        assert batch == ["x1"]  # all-zero alignments tie-break on id
        sampler.report_outcomes([PassRateObservation(problem_id="x1", pass_rate=1.0)])
        assert sampler.record("x1").difficulty == -0.5
        assert sampler.competence_value == 0.5 / 5
        assert sampler.step == 1

    def test_matching_pass_rates_change_nothing_from_fresh_state(self):
        difficulties = {f"x{i}": 0.0 for i in range(1, 7)}
        sampler = _fresh(difficulties, batch_size=4, t=0, warmup=False)
        batch = sampler.select_batch(4)
        # sigmoid(C - D) = 0.5 everywhere, so s = 0.5 leaves d at zero.
        sampler.report_outcomes(
            [PassRateObservation(problem_id=pid, pass_rate=0.5) for pid in batch]
        )
        assert all(record.difficulty == 0.0 for record in sampler.records.values())
        assert sampler.competence_value == 0.0

    def test_equal_difficulty_equal_pass_rate_update_identically(self):
        sampler = _fresh(
            {"a": 0.2, "b": 0.2, "c": -0.4, "d": -0.5},
            batch_size=2,
            warmup=False,
            symmetric=False,
        )
        batch = sampler.select_batch(2)
        assert set(batch) == {"a", "b"}
        sampler.report_outcomes(
            [PassRateObservation(problem_id=pid, pass_rate=0.75) for pid in batch]
        )
        assert sampler.record("a").difficulty == sampler.record("b").difficulty

    def test_all_outcomes_score_against_pre_batch_competence(self):
        # Two problems with the same difficulty must update identically even
        # though folding the first outcome in eagerly would shift competence
        # before the second.
        sampler = _fresh({"a": 0.1, "b": 0.1}, batch_size=2, warmup=False)
        sampler.select_batch(2)
        sampler.report_outcomes(
            [
                PassRateObservation(problem_id="a", pass_rate=1.0),
                PassRateObservation(problem_id="b", pass_rate=1.0),
            ]
        )
        assert sampler.record("a").difficulty == sampler.record("b").difficulty

    def test_outcome_order_is_irrelevant(self):
        sampler = _fresh(SIX_PROBLEMS, batch_size=4, seed=23, t=0)
        rng = np.random.default_rng(5)
        for _ in range(3):
            batch = sampler.select_batch(4)
            sampler.report_outcomes(
                PassRateObservation(problem_id=pid, pass_rate=float(rng.integers(0, 5)) / 4.0)
                for pid in batch
            )
        clone = CdasSampler.from_state_dict(sampler.state_dict())
        batch = sampler.select_batch(4)
        assert clone.select_batch(4) == batch
        outcomes = [
            PassRateObservation(problem_id=pid, pass_rate=rate)
            for pid, rate in zip(batch, (1.0, 0.25, 0.0, 0.75))
        ]
        sampler.report_outcomes(outcomes)
        clone.report_outcomes(reversed(outcomes))
        assert clone.state_dict() == sampler.state_dict()

    def test_competence_is_negated_mean_difficulty(self):
        sampler = _fresh(SIX_PROBLEMS, batch_size=2, seed=3, t=0)
        rng = np.random.default_rng(8)
        for _ in range(6):
            batch = sampler.select_batch(2)
            sampler.report_outcomes(
                PassRateObservation(problem_id=pid, pass_rate=float(rng.random()))
                for pid in batch
            )
        estimates = [record.difficulty for record in sampler.records.values()]
        assert sampler.competence_value == pytest.approx(-np.mean(estimates), abs=1e-12)

    def test_selection_consumes_no_randomness(self):
        sampler = _fresh(SIX_PROBLEMS, batch_size=4, warmup=False)
        before = sampler.state_dict()["rng"]
        sampler.select_batch(4)
        assert sampler.state_dict()["rng"] == before


class TestConsistencyChecks:
    def test_report_without_batch(self):
        sampler = _fresh(SIX_PROBLEMS, batch_size=4)
        with pytest.raises(ConsistencyError):
            sampler.report_outcomes([PassRateObservation(problem_id="x1", pass_rate=0.5)])

    def test_unknown_problem(self):
        sampler = _fresh(SIX_PROBLEMS, batch_size=4)
        sampler.select_batch(4)
        with pytest.raises(ConsistencyError):
            sampler.report_outcomes([PassRateObservation(problem_id="ghost", pass_rate=0.5)])

    def test_problem_outside_batch(self):
        sampler = _fresh(SIX_PROBLEMS, batch_size=4, warmup=False)
        batch = sampler.select_batch(4)
        outsider = next(pid for pid in SIX_PROBLEMS if pid not in batch)
        with pytest.raises(ConsistencyError):
            sampler.report_outcomes([PassRateObservation(problem_id=outsider, pass_rate=0.5)])

    def test_duplicate_outcome(self):
        sampler = _fresh(SIX_PROBLEMS, batch_size=4, warmup=False)
        batch = sampler.select_batch(4)
        with pytest.raises(ConsistencyError):
            sampler.report_outcomes(
                [
                    PassRateObservation(problem_id=batch[0], pass_rate=0.5),
                    PassRateObservation(problem_id=batch[0], pass_rate=1.0),
                ]
            )

    def test_failed_validation_leaves_state_untouched(self):
        sampler = _fresh(SIX_PROBLEMS, batch_size=4, warmup=False)
        batch = sampler.select_batch(4)
        before = sampler.state_dict()
        with pytest.raises(ConsistencyError):
            sampler.report_outcomes(
                [
                    PassRateObservation(problem_id=batch[0], pass_rate=0.5),
                    PassRateObservation(problem_id=batch[0], pass_rate=0.5),
                ]
            )
        assert sampler.state_dict() == before


class TestConfigChecks:
    def test_batch_bounds(self):
        sampler = _fresh(SIX_PROBLEMS, batch_size=4)
        with pytest.raises(ConfigError):
            sampler.select_batch(0)
        with pytest.raises(ConfigError):
            sampler.select_batch(8)

    def test_odd_symmetric_batch(self):
        with pytest.raises(ConfigError):
            _fresh(SIX_PROBLEMS, batch_size=3)

    def test_empty_bank(self):
        with pytest.raises(ConfigError):
            CdasSampler(records=[], batch_size=2, rng=np.random.default_rng(0))

    def test_duplicate_ids(self):
        record = ProblemRecord(id="a")
        with pytest.raises(ConfigError):
            CdasSampler(records=[record, record], batch_size=1, rng=np.random.default_rng(0), symmetric=False)


class TestBatchInvariants:
    def test_composition_and_optimality_over_a_run(self):
        n, batch_size = 40, 8
        difficulties = {f"p{i:02d}": 0.0 for i in range(n)}
        sampler = _fresh(difficulties, batch_size=batch_size, seed=31, t=0)
        rng = np.random.default_rng(77)
        for step in range(30):
            competence = sampler.competence_value
            records = sampler.records
            batch = sampler.select_batch(batch_size)
            assert len(batch) == len(set(batch)) == batch_size
            if not sampler.in_warmup():
                harder_pool = sum(1 for r in records.values() if r.difficulty > competence)
                easier_pool = n - harder_pool
                in_batch_harder = sum(
                    1 for pid in batch if records[pid].difficulty > competence
                )
                if harder_pool >= batch_size // 2 and easier_pool >= batch_size // 2:
                    assert in_batch_harder == batch_size // 2
                chosen = set(batch)
                for side in (
                    [(a, pid) for pid, r in records.items() if r.difficulty <= competence
                     for a in [alignment(competence, r.difficulty)]],
                    [(a, pid) for pid, r in records.items() if r.difficulty > competence
                     for a in [alignment(competence, r.difficulty)]],
                ):
                    picked = [a for a, pid in side if pid in chosen]
                    skipped = [a for a, pid in side if pid not in chosen]
                    if picked and skipped:
                        assert max(picked) <= min(skipped)
            sampler.report_outcomes(
                PassRateObservation(
                    problem_id=pid, pass_rate=float(rng.integers(0, 5)) / 4.0, step=step
                )
                for pid in batch
            )
        assert min(record.t for record in sampler.records.values()) >= 1

    def test_same_seed_same_history_is_bit_identical(self):
        def drive(seed):
            sampler = _fresh(SIX_PROBLEMS, batch_size=2, seed=seed, t=0)
            rng = np.random.default_rng(1234)
            batches = []
            for _ in range(8):
                batch = sampler.select_batch(2)
                batches.append(batch)
                sampler.report_outcomes(
                    PassRateObservation(problem_id=pid, pass_rate=float(rng.integers(0, 3)) / 2.0)
                    for pid in batch
                )
            return batches, sampler.state_dict()

        batches_a, state_a = drive(6)
        batches_b, state_b = drive(6)
        assert batches_a == batches_b
        assert state_a == state_b


class TestSerialization:
    def test_round_trip_preserves_pending_batch(self):
        sampler = _fresh(SIX_PROBLEMS, batch_size=4, t=0)
        batch = sampler.select_batch(4)
        clone = CdasSampler.from_state_dict(sampler.state_dict())
        clone.report_outcomes(
            [PassRateObservation(problem_id=pid, pass_rate=0.5) for pid in batch]
        )
        assert clone.step == 1

    def test_round_trip_is_identity_on_state(self):
        sampler = _fresh(SIX_PROBLEMS, batch_size=4, t=0)
        batch = sampler.select_batch(4)
        sampler.report_outcomes(
            [PassRateObservation(problem_id=pid, pass_rate=0.25) for pid in batch]
        )
        payload = sampler.state_dict()
        assert CdasSampler.from_state_dict(payload).state_dict() == payload
