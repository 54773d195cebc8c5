"""Synthetic learner calibration and problem-bank construction."""

import math

import numpy as np
import pytest

from cdas.core import ProblemRecord
from cdas.errors import ConfigError
from cdas.learner import (
    ProblemBank,
    SyntheticLearner,
    default_ability,
    generate_bank,
    load_bank,
    save_bank,
)


def _problem(b, pid="q", tag=None):
    return ProblemRecord(id=pid, level_tag=tag, true_difficulty=b)


def _learner(ability, seed=0, **kwargs):
    return SyntheticLearner(ability=ability, rng=np.random.default_rng(seed), **kwargs)


class TestSuccessProbability:
    def test_ability_at_latent_difficulty_is_even_odds(self):
        assert _learner(1.3).success_probability(_problem(1.3)) == 0.5

    def test_logistic_value(self):
        # sigmoid(1) to the digit.
        assert _learner(1.0).success_probability(_problem(0.0)) == pytest.approx(
            0.7310585786300049, abs=1e-15
        )

    def test_discrimination_scales_the_gap(self):
        gentle = _learner(1.0, discrimination=0.5).success_probability(_problem(0.0))
        steep = _learner(1.0, discrimination=4.0).success_probability(_problem(0.0))
        assert gentle < steep

    def test_harder_problem_is_less_likely(self):
        learner = _learner(0.0)
        assert learner.success_probability(_problem(1.0)) < learner.success_probability(
            _problem(0.0)
        )

    def test_missing_latent_difficulty_rejected(self):
        with pytest.raises(ValueError):
            _learner(0.0).success_probability(ProblemRecord(id="q"))


class TestRollouts:
    def test_empirical_rate_matches_model(self):
        # One huge group: the empirical pass rate should sit within three
        # standard errors of sigmoid(ability - b).
        p = 1.0 / (1.0 + math.exp(-0.7))
        learner = _learner(0.2, seed=11, rollouts=10_000)
        group = learner.rollout_group(_problem(-0.5))
        standard_error = math.sqrt(p * (1.0 - p) / 10_000)
        assert abs(group.pass_rate - p) <= 3 * standard_error

    def test_far_below_ability_groups_all_pass(self):
        learner = _learner(10.0, seed=5)
        all_pass = sum(
            learner.rollout_group(_problem(0.0)).pass_rate == 1.0 for _ in range(10_000)
        )
        assert all_pass / 10_000 >= 0.999

    def test_group_size_and_id(self):
        group = _learner(0.0, rollouts=6).rollout_group(_problem(0.0, pid="x9"))
        assert group.problem_id == "x9"
        assert len(group.rewards) == 6

    def test_rollout_observation_carries_step(self):
        obs = _learner(0.0).rollout(_problem(0.0, pid="x1"), step=7)
        assert obs.problem_id == "x1"
        assert obs.step == 7
        assert 0.0 <= obs.pass_rate <= 1.0

    def test_same_seed_same_draws(self):
        a = _learner(0.3, seed=77).rollout_group(_problem(0.1))
        b = _learner(0.3, seed=77).rollout_group(_problem(0.1))
        assert a.rewards == b.rewards


class TestLearnStep:
    def test_all_useful_moves_by_full_rate(self):
        learner = _learner(1.0, learn_rate=0.05)
        learner.learn_step([(0.5, False), (0.25, False)])
        assert learner.ability == pytest.approx(1.05, abs=1e-15)

    def test_all_zero_gradient_moves_nothing(self):
        learner = _learner(1.0)
        learner.learn_step([(1.0, True), (0.0, True)])
        assert learner.ability == 1.0

    def test_half_useful_moves_half(self):
        learner = _learner(0.0, learn_rate=0.1)
        learner.learn_step([(0.5, False), (1.0, True)])
        assert learner.ability == pytest.approx(0.05, abs=1e-15)

    def test_empty_batch_rejected(self):
        with pytest.raises(ValueError):
            _learner(0.0).learn_step([])

    def test_ability_never_decreases(self):
        rng = np.random.default_rng(3)
        learner = _learner(-1.0, seed=8)
        previous = learner.ability
        for _ in range(200):
            outcomes = [(0.5, bool(rng.random() < 0.5)) for _ in range(4)]
            learner.learn_step(outcomes)
            assert learner.ability >= previous
            previous = learner.ability


class TestLearnerConfig:
    def test_bad_discrimination(self):
        with pytest.raises(ConfigError):
            _learner(0.0, discrimination=0.0)

    def test_bad_learn_rate(self):
        with pytest.raises(ConfigError):
            _learner(0.0, learn_rate=-0.1)

    def test_bad_rollouts(self):
        with pytest.raises(ConfigError):
            _learner(0.0, rollouts=1)

    def test_state_round_trip_resumes_stream(self):
        learner = _learner(0.4, seed=21)
        learner.rollout_group(_problem(0.0))
        clone = SyntheticLearner.from_state_dict(learner.state_dict())
        want = learner.rollout_group(_problem(0.2))
        got = clone.rollout_group(_problem(0.2))
        assert got.rewards == want.rewards
        assert clone.ability == learner.ability


class TestGenerateBank:
    def test_normal_mode_quintiles_are_balanced(self):
        bank = generate_bank(100, np.random.default_rng(0))
        tags = np.array([record.level_tag for record in bank.records])
        counts = np.bincount(tags, minlength=6)[1:]
        assert list(counts) == [20] * 5

    def test_normal_mode_tags_sort_with_latents(self):
        bank = generate_bank(50, np.random.default_rng(1))
        by_latent = sorted(bank.records, key=lambda r: r.true_difficulty)
        tags = [record.level_tag for record in by_latent]
        assert tags == sorted(tags)

    def test_levels_mode_latents_are_equally_spaced(self):
        bank = generate_bank(200, np.random.default_rng(2), mode="levels", level_spread=2.0)
        for record in bank.records:
            assert record.true_difficulty == (record.level_tag - 3) * 1.0
        assert {record.level_tag for record in bank.records} == {1, 2, 3, 4, 5}

    def test_ids_are_zero_padded_and_unique(self):
        bank = generate_bank(12, np.random.default_rng(3))
        assert bank.ids[0] == "p00000"
        assert bank.ids[-1] == "p00011"
        assert len(set(bank.ids)) == 12

    def test_reproducible_and_seed_sensitive(self):
        one = generate_bank(40, np.random.default_rng(9))
        two = generate_bank(40, np.random.default_rng(9))
        other = generate_bank(40, np.random.default_rng(10))
        assert one.content_hash() == two.content_hash()
        assert one.content_hash() != other.content_hash()

    def test_records_start_unscheduled(self):
        bank = generate_bank(5, np.random.default_rng(4), initial_difficulty=0.25)
        assert all(record.t == 0 for record in bank.records)
        assert all(record.difficulty == 0.25 for record in bank.records)

    def test_bad_sizes_and_modes(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ConfigError):
            generate_bank(0, rng)
        with pytest.raises(ConfigError):
            generate_bank(5, rng, scale=0.0)
        with pytest.raises(ConfigError):
            generate_bank(5, rng, mode="levels", level_spread=-1.0)
        with pytest.raises(ConfigError):
            generate_bank(5, rng, mode="mystery")


class TestBankContainer:
    def test_lookup_and_len(self):
        bank = generate_bank(7, np.random.default_rng(6))
        assert len(bank) == 7
        assert bank.problem("p00003").id == "p00003"

    def test_duplicate_ids_rejected(self):
        record = ProblemRecord(id="dup", true_difficulty=0.0)
        with pytest.raises(ConfigError):
            ProblemBank(records=(record, record))

    def test_missing_latent_rejected(self):
        with pytest.raises(ConfigError):
            ProblemBank(records=(ProblemRecord(id="a"),))

    def test_hash_ignores_scheduler_state(self):
        base = ProblemRecord(id="a", level_tag=2, true_difficulty=0.5)
        touched = ProblemRecord(id="a", level_tag=2, true_difficulty=0.5, t=3, difficulty=-0.4)
        assert (
            ProblemBank(records=(base,)).content_hash()
            == ProblemBank(records=(touched,)).content_hash()
        )

    def test_default_ability_is_fifth_percentile(self):
        bank = generate_bank(500, np.random.default_rng(12))
        expected = float(np.percentile(bank.true_difficulties(), 5.0))
        assert default_ability(bank) == expected


class TestBankFiles:
    def test_round_trip(self, tmp_path):
        bank = generate_bank(30, np.random.default_rng(14), mode="levels")
        path = tmp_path / "bank.json"
        save_bank(bank, path)
        loaded = load_bank(path)
        assert loaded.content_hash() == bank.content_hash()
        assert loaded.mode == "levels"
        assert loaded.ids == bank.ids

    def test_tampered_file_rejected(self, tmp_path):
        bank = generate_bank(10, np.random.default_rng(15))
        path = tmp_path / "bank.json"
        save_bank(bank, path)
        text = path.read_text().replace(
            repr(bank.records[0].true_difficulty), repr(bank.records[0].true_difficulty + 1.0), 1
        )
        path.write_text(text)
        with pytest.raises(ConfigError):
            load_bank(path)

    def test_unknown_version_rejected(self, tmp_path):
        path = tmp_path / "bank.json"
        path.write_text('{"format_version": 99, "records": []}')
        with pytest.raises(ConfigError):
            load_bank(path)
