"""Steady-state GA, surrogate control loop, and campaign history."""

import numpy as np
import pytest

from voxturbine.evolver import (
    Campaign,
    CampaignConfig,
    Individual,
    MODE_GA,
    MODE_SURROGATE,
    PROVENANCE_PREDICTED,
    PROVENANCE_REAL,
    RANK_SQUEEZE,
    config_from_payload,
    genome_from_payload,
    genome_payload,
    rank_calibration,
    run_campaign,
)
from voxturbine.fitness import ProxyTipSpeedOracle, TargetMatchOracle
from voxturbine.genome import Genome, MutationConfig

FIG_BASE = (2, 2, 3, 4, 5, 8, 13, 20, 34, 40)


class SumOracle:
    """Pure toy oracle: fitness = sum of base alleles / 420."""

    kind = "sanity"

    def __init__(self):
        self.evaluation_count = 0

    def evaluate_many(self, genomes):
        self.evaluation_count += len(genomes)
        return [sum(g.base) / 420.0 for g in genomes]


class ConstantOracle:
    kind = "sanity"

    def __init__(self, value=1.0):
        self.value = value
        self.evaluation_count = 0

    def evaluate_many(self, genomes):
        self.evaluation_count += len(genomes)
        return [self.value] * len(genomes)


def collect(events):
    def sink(kind, payload):
        events.append((kind, payload))

    return sink


class TestRankCalibration:
    def test_distinct_values_get_squeezed_mid_ranks(self):
        targets, knots, values = rank_calibration(np.array([1.0, 2.0, 3.0]))
        expected = RANK_SQUEEZE + (1 - 2 * RANK_SQUEEZE) * np.array([1, 3, 5]) / 6.0
        assert np.allclose(targets, expected)
        assert np.allclose(knots, expected)
        assert np.array_equal(values, [1.0, 2.0, 3.0])

    def test_ties_share_one_target(self):
        targets, knots, values = rank_calibration(np.array([5.0, 5.0, 9.0]))
        assert targets[0] == targets[1]
        # two-way tie occupies ranks 1..2, mid-rank 1/3
        assert targets[0] == pytest.approx(RANK_SQUEEZE + (1 - 2 * RANK_SQUEEZE) / 3.0)
        assert len(knots) == len(values) == 2

    def test_targets_confined_to_squeeze_band(self):
        rng = np.random.default_rng(0)
        y = rng.normal(size=500)
        targets, _, _ = rank_calibration(y)
        assert targets.min() >= RANK_SQUEEZE
        assert targets.max() <= 1 - RANK_SQUEEZE

    def test_order_preserving(self):
        rng = np.random.default_rng(1)
        y = rng.normal(size=100)
        targets, _, _ = rank_calibration(y)
        order = np.argsort(y)
        assert np.all(np.diff(targets[order]) >= 0)

    def test_inverse_map_round_trips(self):
        y = np.array([3.0, 1.0, 4.0, 1.0, 5.0])
        _, knots, values = rank_calibration(y)
        assert np.all(np.diff(knots) > 0)
        assert np.array_equal(np.interp(knots, knots, values), values)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            CampaignConfig(evaluation_budget=100, population_size=1)
        with pytest.raises(ValueError):
            CampaignConfig(evaluation_budget=10, population_size=20)
        with pytest.raises(ValueError):
            CampaignConfig(evaluation_budget=100, mode="annealing")
        with pytest.raises(ValueError):
            CampaignConfig(evaluation_budget=100, warmup_generations=-1)
        with pytest.raises(ValueError):
            CampaignConfig(evaluation_budget=100, fitness_scale=0.0)
        with pytest.raises(ValueError):
            CampaignConfig(evaluation_budget=100, stop_threshold=0.0)
        with pytest.raises(ValueError):
            CampaignConfig(
                evaluation_budget=100, z_mode=True, target_genome=Genome(FIG_BASE)
            )

    def test_payload_round_trip(self):
        cfg = CampaignConfig(
            evaluation_budget=500,
            seed=7,
            mutation=MutationConfig(rate=0.3, max_step=5),
            z_mode=True,
            mode=MODE_SURROGATE,
            warmup_generations=2,
            stop_threshold=0.99,
            target_genome=Genome(FIG_BASE, (1, -2, 3, -4, 5)),
        )
        assert config_from_payload(cfg.to_payload()) == cfg

    def test_unknown_keys_rejected(self):
        with pytest.raises(ValueError):
            config_from_payload({"evaluationBudget": 100, "crossoverRate": 0.5})
        with pytest.raises(ValueError):
            config_from_payload({"seed": 3})

    def test_genome_payload_round_trip(self):
        flat = Genome(FIG_BASE)
        tall = Genome(FIG_BASE, (0, 1, -1, 42, -42))
        assert genome_from_payload(genome_payload(flat)) == flat
        assert genome_from_payload(genome_payload(tall)) == tall


class TestInitialization:
    def test_archive_and_population_after_init(self):
        oracle = SumOracle()
        campaign = Campaign(CampaignConfig(evaluation_budget=100, seed=3), oracle)
        campaign.initialize()
        assert campaign.evaluations == 20
        assert oracle.evaluation_count == 20
        assert len(campaign.population) == 20
        assert all(m.evaluated for m in campaign.population)
        assert all(m.provenance == PROVENANCE_REAL for m in campaign.population)

    def test_double_init_rejected(self):
        campaign = Campaign(CampaignConfig(evaluation_budget=100), SumOracle())
        campaign.initialize()
        with pytest.raises(RuntimeError):
            campaign.initialize()

    def test_step_before_init_rejected(self):
        campaign = Campaign(CampaignConfig(evaluation_budget=100), SumOracle())
        with pytest.raises(RuntimeError):
            campaign.ga_step()

    def test_same_seed_identical_archive(self):
        def init_archive():
            campaign = Campaign(CampaignConfig(evaluation_budget=100, seed=11), SumOracle())
            campaign.initialize()
            return campaign.archive

        assert init_archive() == init_archive()

    def test_budget_equal_to_population_returns_immediately(self):
        campaign = run_campaign(CampaignConfig(evaluation_budget=20, seed=0), SumOracle())
        assert campaign.finished
        assert campaign.finish_reason == "budget"
        assert campaign.evaluations == 20
        assert campaign.generation == 0


class TestGaStep:
    def test_twenty_steps_advance_one_generation(self):
        campaign = Campaign(CampaignConfig(evaluation_budget=100, seed=5), SumOracle())
        campaign.initialize()
        for _ in range(19):
            campaign.ga_step()
        assert campaign.generation == 0
        campaign.ga_step()
        assert campaign.generation == 1
        assert campaign.evaluations == 40

    def test_tie_rule_still_replaces(self):
        events = []
        campaign = Campaign(
            CampaignConfig(evaluation_budget=100, seed=2), ConstantOracle(), collect(events)
        )
        campaign.initialize()
        campaign.ga_step()
        child = genome_from_payload(events[-1][1]["genome"])
        assert events[-1][0] == "individual_evaluated"
        assert any(m.genome == child for m in campaign.population)

    def test_best_member_never_replaced(self):
        campaign = Campaign(CampaignConfig(evaluation_budget=400, seed=9), SumOracle())
        campaign.initialize()
        best = max(m.fitness for m in campaign.population)
        for _ in range(200):
            campaign.ga_step()
            now = max(m.fitness for m in campaign.population)
            assert now >= best
            best = now

    def test_evaluation_accounting(self):
        oracle = SumOracle()
        campaign = Campaign(CampaignConfig(evaluation_budget=400, seed=1), oracle)
        campaign.initialize()
        for _ in range(50):
            campaign.ga_step()
            assert oracle.evaluation_count == campaign.evaluations


class TestSurrogateGeneration:
    def make_campaign(self, budget=200, seed=4, warmup=0):
        config = CampaignConfig(
            evaluation_budget=budget, seed=seed, mode=MODE_SURROGATE,
            warmup_generations=warmup,
        )
        campaign = Campaign(config, ProxyTipSpeedOracle())
        campaign.initialize()
        return campaign

    def test_two_real_evaluations_per_generation(self):
        campaign = self.make_campaign()
        for g in range(1, 6):
            campaign.surrogate_generation()
            assert campaign.evaluations == 20 + 2 * g
        assert campaign.generation == 5

    def test_requires_trained_model(self):
        campaign = Campaign(CampaignConfig(evaluation_budget=100, seed=4), SumOracle())
        campaign.initialize()
        with pytest.raises(RuntimeError):
            campaign.surrogate_generation()

    def test_population_mixes_provenances(self):
        campaign = self.make_campaign()
        campaign.surrogate_generation()
        kinds = {m.provenance for m in campaign.population}
        assert PROVENANCE_PREDICTED in kinds
        assert PROVENANCE_REAL in kinds

    def test_predictions_in_archive_fitness_range(self):
        # The inverse quantile map clamps to achieved real values.
        campaign = self.make_campaign()
        campaign.surrogate_generation()
        real = [f for _, f in campaign.archive]
        for member in campaign.population:
            if not member.evaluated:
                assert min(real) <= member.fitness <= max(real)

    def test_repredict_idempotent_after_generation(self):
        campaign = self.make_campaign()
        campaign.surrogate_generation()
        before = list(campaign.population)
        campaign._repredict()
        assert campaign.population == before

    def test_last_budget_slot_takes_single_evaluation(self):
        campaign = self.make_campaign(budget=21)
        campaign.surrogate_generation()
        assert campaign.evaluations == 21

    def test_warmup_runs_ga_steps_first(self):
        config = CampaignConfig(
            evaluation_budget=70, seed=8, mode=MODE_SURROGATE, warmup_generations=2
        )
        campaign = run_campaign(config, ProxyTipSpeedOracle())
        # init 20 + two ga generations at 20 each, then 2 per generation
        assert campaign.evaluations == 70
        assert campaign.generation == 2 + 5

    def test_archive_size_after_run(self):
        campaign = run_campaign(
            CampaignConfig(evaluation_budget=30, seed=6, mode=MODE_SURROGATE),
            ProxyTipSpeedOracle(),
        )
        assert campaign.evaluations == 30
        assert campaign.generation == 5


class TestHistory:
    def test_single_point_after_init(self):
        campaign = run_campaign(CampaignConfig(evaluation_budget=20, seed=0), SumOracle())
        series = campaign.history_series()
        assert len(series) == 1
        assert series[0][0] == 20
        assert series[0][1] == max(f for _, f in campaign.archive)

    def test_monotone_columns(self):
        campaign = run_campaign(CampaignConfig(evaluation_budget=300, seed=3), SumOracle())
        series = campaign.history_series()
        xs = [x for x, _ in series]
        ys = [y for _, y in series]
        assert xs[0] == 20
        assert xs[-1] == campaign.evaluations
        assert all(b > a for a, b in zip(xs, xs[1:]))
        assert all(b >= a for a, b in zip(ys, ys[1:]))

    def test_per_evaluation_series_covers_archive(self):
        campaign = run_campaign(CampaignConfig(evaluation_budget=120, seed=3), SumOracle())
        series = campaign.per_evaluation_series()
        assert len(series) == campaign.evaluations
        assert series[-1][1] == campaign.best_real

    def test_empty_before_population_complete(self):
        campaign = Campaign(CampaignConfig(evaluation_budget=100), SumOracle())
        assert campaign.history_series() == []


class TestDeterminism:
    def test_ga_event_log_bit_identical(self):
        def run_once():
            events = []
            run_campaign(
                CampaignConfig(evaluation_budget=200, seed=13), SumOracle(), collect(events)
            )
            return events

        assert run_once() == run_once()

    def test_surrogate_event_log_bit_identical(self):
        def run_once():
            events = []
            run_campaign(
                CampaignConfig(evaluation_budget=36, seed=13, mode=MODE_SURROGATE),
                ProxyTipSpeedOracle(),
                collect(events),
            )
            return events

        assert run_once() == run_once()

    def test_event_stream_shape(self):
        events = []
        campaign = run_campaign(
            CampaignConfig(evaluation_budget=60, seed=1), SumOracle(), collect(events)
        )
        kinds = [k for k, _ in events]
        assert kinds[0] == "campaign_created"
        assert kinds[-1] == "campaign_finished"
        assert kinds.count("individual_evaluated") == campaign.evaluations
        assert kinds.count("generation_advanced") == campaign.generation


class TestRunTermination:
    def test_budget_respected(self):
        campaign = run_campaign(CampaignConfig(evaluation_budget=137, seed=2), SumOracle())
        assert campaign.evaluations == 137
        assert campaign.finish_reason == "budget"

    def test_threshold_stops_early(self):
        campaign = run_campaign(
            CampaignConfig(evaluation_budget=2000, seed=0, stop_threshold=0.95),
            SumOracle(),
        )
        assert campaign.finish_reason == "threshold"
        assert campaign.best_real >= 0.95
        assert campaign.evaluations < 2000

    def test_target_oracle_defaults_to_perfect_match_stop(self):
        campaign = Campaign(
            CampaignConfig(evaluation_budget=100), TargetMatchOracle(Genome(FIG_BASE))
        )
        assert campaign.stop_threshold == 1.0

    def test_sanity_optimization_ten_seeds(self):
        # Σalleles/420 reaches 0.95 within 2,000 evaluations on every seed.
        for seed in range(10):
            campaign = run_campaign(
                CampaignConfig(evaluation_budget=2000, seed=seed, stop_threshold=0.95),
                SumOracle(),
            )
            assert campaign.finish_reason == "threshold", f"seed {seed}"

    def test_run_twice_is_noop(self):
        campaign = run_campaign(CampaignConfig(evaluation_budget=40, seed=5), SumOracle())
        evaluations = campaign.evaluations
        campaign.run()
        assert campaign.evaluations == evaluations
