"""
Tests for seeded runs, regret and sweeps
"""

import numpy as np
import pytest

from src.bandits.core import RngStream
from src.bandits.errors import ConfigError, DataError
from src.config.experiment_config import parse_config
from src.models.experiment import AlgorithmMode, RegretKind
from src.services.experiment_service import (
    baseline_config,
    clusters_config,
    cumulative_regret,
    experiment_service,
    final_regret,
    regret_from_means,
)
from src.services.trace_service import trace_service
from tests.conftest import small_sections


class TestRegretFromMeans:
    def test_best_arm_always(self):
        means = np.tile([0.3, 0.8, 0.5], (20, 1))
        assert np.allclose(regret_from_means(np.ones(20, dtype=int), means), 0.0)

    def test_hand_computation(self):
        series = regret_from_means([1, 0], np.array([[0.9, 0.1], [0.9, 0.1]]))
        assert series == pytest.approx([0.8, 0.8])

    def test_tracking_a_swap_gives_negative_regret(self):
        series = regret_from_means([0, 1], np.array([[1.0, 0.0], [0.0, 1.0]]))
        assert series[-1] == pytest.approx(-1.0)

    def test_missing_means(self):
        with pytest.raises(DataError):
            regret_from_means([0, 1], np.array([[0.5, np.nan], [0.2, 0.3]]))

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            regret_from_means([0, 1, 0], np.zeros((2, 2)))


class TestRunOnce:
    def test_deterministic(self):
        config = parse_config(small_sections())
        first = experiment_service.run_once(config, 1)
        second = experiment_service.run_once(config, 1)
        for name in ("clusters", "arms", "rewards", "chosen_means", "best_prefix"):
            assert np.array_equal(getattr(first, name), getattr(second, name))
        assert first.run_id == second.run_id

    def test_repeats_differ(self):
        config = parse_config(small_sections())
        assert not np.array_equal(experiment_service.run_once(config, 0).arms,
                                  experiment_service.run_once(config, 1).arms)

    def test_record_shape(self):
        config = parse_config(small_sections())
        record = experiment_service.run_once(config, 0)
        assert record.horizon == 200
        assert record.p == 4
        assert record.partition.p == 4
        assert np.all((record.rewards >= 0) & (record.rewards <= 1))
        assert set(np.unique(record.clusters)) <= {0, 1, 2, 3}

    def test_single_cluster_equals_flat_child(self):
        config = parse_config(small_sections(partition={"clusters": 1}, algorithm={"parent": "exp3"}))
        hierarchical = experiment_service.run_once(config, 0)
        flat = experiment_service.run_once(baseline_config(config), 0)
        assert np.array_equal(hierarchical.arms, flat.arms)
        assert np.array_equal(cumulative_regret(hierarchical), cumulative_regret(flat))
        assert np.all(flat.clusters == -1)

    def test_monotone_regret_in_stationary_environment(self):
        config = parse_config(small_sections(environment={"delta": 0.3, "best_arm": 6}))
        regret = cumulative_regret(experiment_service.run_once(config, 0))
        assert np.all(np.diff(regret) >= -1e-12)

    def test_incremental_regret_matches_mean_matrix(self, trace_file):
        config = parse_config(small_sections(
            arms={"k": 4, "d": 1},
            environment={"kind": "trace", "trace_path": str(trace_file)},
            partition={"clusters": 2},
            experiment={"horizon": 250},
        ))
        record = experiment_service.run_once(config, 0)
        trace = trace_service.load_trace(trace_file)
        matrix = np.array([trace.means_at(trace.first + t) for t in range(250)])
        assert cumulative_regret(record, matrix.sum(axis=0)) == pytest.approx(
            regret_from_means(record.arms, matrix), abs=1e-9
        )
        assert np.array_equal(record.rewards, record.chosen_means)

    def test_realized_regret_uses_draws(self):
        config = parse_config(small_sections(experiment={"regret": "realized"}))
        record = experiment_service.run_once(config, 0)
        realized = cumulative_regret(record, kind=RegretKind.REALIZED)
        assert realized[-1] == pytest.approx(record.reward_totals.max() - record.rewards.sum())
        assert final_regret(record, RegretKind.REALIZED) == pytest.approx(realized[-1])

    def test_inconsistent_totals(self):
        record = experiment_service.run_once(parse_config(small_sections()), 0)
        with pytest.raises(DataError):
            cumulative_regret(record, mean_totals=record.mean_totals + 5.0)

    def test_work_is_recorded(self):
        record = experiment_service.run_once(parse_config(small_sections()), 0)
        assert record.work > 0

    def test_errors_carry_run_label(self, trace_file):
        config = parse_config(small_sections(
            arms={"k": 4, "d": 1},
            environment={"kind": "trace", "trace_path": str(trace_file)},
            partition={"clusters": 2},
            experiment={"horizon": 5000},
        ))
        with pytest.raises(ConfigError, match="small-abob-p2-r0"):
            experiment_service.run_once(config, 0)


class TestValidate:
    def test_short_trace(self, trace_file):
        config = parse_config(small_sections(
            arms={"k": 4, "d": 1},
            environment={"kind": "trace", "trace_path": str(trace_file)},
            partition={"clusters": 2},
            experiment={"horizon": 302},
        ))
        with pytest.raises(ConfigError, match="covers 301 steps"):
            experiment_service.validate(config)

    def test_trace_arm_count(self, trace_file):
        config = parse_config(small_sections(
            arms={"k": 16},
            environment={"kind": "trace", "trace_path": str(trace_file)},
        ))
        with pytest.raises(ConfigError, match="4 arms"):
            experiment_service.validate(config)

    def test_uniform_support_is_checked(self):
        config = parse_config(small_sections(environment={"reward_kind": "uniform", "reward_width": 0.9}))
        with pytest.raises(ConfigError):
            experiment_service.validate(config)

    def test_valid_config(self):
        experiment_service.validate(parse_config(small_sections()))


class TestSweeps:
    def test_single_point_equals_flat_child(self):
        config = parse_config(small_sections(experiment={"repeats": 3}))
        rows, by_p, skipped = experiment_service.sweep_clusters(config, [1])
        flat = experiment_service.final_regrets(baseline_config(config))
        assert len(rows) == 1 and not skipped
        assert by_p[1] == flat
        assert rows[0].mean_regret == pytest.approx(np.mean(flat))

    def test_duplicates_and_invalid_points(self):
        config = parse_config(small_sections())
        rows, _, skipped = experiment_service.sweep_clusters(config, [2, 3, 2, 32])
        assert [row.p for row in rows] == [2, 2]
        assert rows[0] == rows[1]
        assert len(skipped) == 2
        assert skipped[0].startswith("p=3")

    def test_more_clusters_than_rounds(self):
        config = parse_config(small_sections(
            experiment={"horizon": 8},
            algorithm={"parent": "exp3", "child": "exp3", "policy": "exp3"},
        ))
        rows, _, skipped = experiment_service.sweep_clusters(config, [1, 2, 4, 16])
        assert [row.p for row in rows] == [1, 2, 4, 16]
        assert not skipped

    def test_parallel_matches_serial(self):
        config = parse_config(small_sections(experiment={"repeats": 3, "horizon": 120}))
        serial = experiment_service.sweep_clusters(config, [1, 2, 4], workers=1)
        parallel = experiment_service.sweep_clusters(config, [1, 2, 4], workers=2)
        assert serial[0] == parallel[0]
        assert serial[1] == parallel[1]

    def test_common_random_numbers(self):
        """Every cluster count sees the same environment draws for a given repeat"""
        config = parse_config(small_sections())
        a = experiment_service.run_once(clusters_config(config, 2), 0)
        b = experiment_service.run_once(clusters_config(config, 8), 0)
        assert np.array_equal(a.mean_totals, b.mean_totals)

    def test_sweep_cluster_defaults(self):
        config = parse_config(small_sections())
        assert config.sweep_cluster_values() == [1, 2, 4, 8, 16]

    def test_sweep_arms(self):
        config = parse_config(small_sections(experiment={"horizon": 100, "repeats": 2}))
        rows, skipped = experiment_service.sweep_arms(config, [4, 16, 5])
        assert [(row.k, row.p) for row in rows] == [(4, 2), (16, 4), (5, 1)]
        assert not skipped
        for row in rows:
            assert row.ratio == pytest.approx(row.abob_mean / row.flat_mean)

    def test_sweep_arms_rejects_trace(self, trace_file):
        config = parse_config(small_sections(
            arms={"k": 4}, environment={"kind": "trace", "trace_path": str(trace_file)}, partition={"clusters": 2}
        ))
        with pytest.raises(ConfigError):
            experiment_service.sweep_arms(config, [4])


def test_baseline_config_runs_child_flat():
    config = parse_config(small_sections(algorithm={"child": "ucb1", "parent": "exp3"}))
    baseline = baseline_config(config)
    assert baseline.algorithm.kind is AlgorithmMode.FLAT
    assert baseline.algorithm.policy.value == "ucb1"
    assert config.algorithm.kind is AlgorithmMode.ABOB


def test_partition_stream_is_labelled():
    config = parse_config(small_sections(partition={"method": "shuffled", "clusters": 4}))
    record = experiment_service.run_once(config, 0)
    expected = experiment_service.build_agent(config, RngStream(11).derive("run", 0))[1]
    assert record.partition == expected
