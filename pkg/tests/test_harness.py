"""Tests for the experiment harness: configs, runner, I/O, replication."""

import csv
import json
import os

import numpy as np
import pytest

from streamacq.agents import (
    CertaintyThresholdAgent,
    EpsilonGreedyAgent,
    LowDensityAgent,
    RandomBaseline,
    SpaceFillingAgent,
    UncertaintyBaseline,
)
from streamacq.datagen import (
    Dataset,
    GeneratorConfig,
    STAGE_CASE_SPLIT,
    generate,
    scenario_split,
)
from streamacq.harness import (
    CASE_STUDY_POOL_SIZE,
    CONFIG_KEYS,
    ExperimentConfig,
    RunMetrics,
    STRATEGIES,
    StreamRunner,
    case_study_split,
    export_results,
    load_csv_stream,
    load_experiment_config,
    parse_config_text,
    run_experiment,
    run_replications,
    summary_table,
    write_dataset_csv,
)
from streamacq.learner import LearnerConfig

SMALL_GEN = GeneratorConfig(n=500, p=5, seed=0)


def small_config(strategy="rs", **kwargs):
    return ExperimentConfig(strategy=strategy, generator=SMALL_GEN, **kwargs)


@pytest.fixture(scope="module")
def split():
    return scenario_split(generate(SMALL_GEN), seed=0)


@pytest.fixture(scope="module")
def metrics():
    return run_experiment(small_config("ensemble2"), 0)


class TestConfigParsing:
    def test_defaults_round_trip(self):
        cfg = parse_config_text("")
        assert cfg == ExperimentConfig()

    def test_nested_keys_route_to_subconfigs(self):
        text = "\n".join([
            "# data shape",
            "strategy = ensemble4",
            "n = 500",
            "p = 8",
            "flip_share = 0.03",
            "",
            "informative_reward = 2.0",
            "redundant_reward = 0.25",
            "penalty = l2",
            "penalty_strength = 0.5",
            "max_iter = 200",
            "p_min = 0.05",
            "monitor = false",
            "ld1_window = 40",
        ])
        cfg = parse_config_text(text)
        assert cfg.strategy == "ensemble4"
        assert cfg.generator.n == 500
        assert cfg.generator.p == 8
        assert cfg.generator.flip_share == 0.03
        assert cfg.rewards.informative == 2.0
        assert cfg.rewards.redundant == 0.25
        assert cfg.learner.penalty == "l2"
        assert cfg.learner.strength == 0.5
        assert cfg.learner.max_iter == 200
        assert cfg.p_min == 0.05
        assert cfg.monitor is False
        assert cfg.ld1_window == 40

    def test_p_min_auto_maps_to_none(self):
        assert parse_config_text("p_min = auto").p_min is None

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="unknown config key"):
            parse_config_text("windowsize = 10")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ValueError, match="duplicate key"):
            parse_config_text("n = 10\nn = 20")

    def test_malformed_line_rejected(self):
        with pytest.raises(ValueError, match="key=value"):
            parse_config_text("just words")

    def test_bad_value_names_the_key(self):
        with pytest.raises(ValueError, match="'n'"):
            parse_config_text("n = lots")

    def test_bad_boolean_rejected(self):
        with pytest.raises(ValueError, match="boolean"):
            parse_config_text("monitor = maybe")

    def test_config_keys_cover_example(self):
        for key in ("n", "p", "strategy", "p_min", "monitor", "penalty",
                    "ral3_rate", "budget_fraction"):
            assert key in CONFIG_KEYS

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("strategy = ld1\nn = 600\n", encoding="utf-8")
        cfg = load_experiment_config(str(path))
        assert cfg.strategy == "ld1"
        assert cfg.generator.n == 600


class TestExperimentConfig:
    def test_unknown_strategy_rejected(self):
        with pytest.raises(ValueError, match="unknown strategy"):
            ExperimentConfig(strategy="oracle")

    def test_budget_fraction_validated(self):
        with pytest.raises(ValueError):
            ExperimentConfig(budget_fraction=0.0)
        with pytest.raises(ValueError):
            ExperimentConfig(budget_fraction=1.5)

    def test_roster_sizes(self):
        sizes = {"ensemble2": 2, "ensemble4": 4, "ensemble6": 6,
                 "ld1": 1, "spf1": 1, "ral2": 1, "us": 1, "rs": 1}
        for strategy, expected in sizes.items():
            cfg = ExperimentConfig(strategy=strategy)
            assert len(cfg.build_agents(48, 480)) == expected

    def test_strategy_list_matches_rosters(self):
        for strategy in STRATEGIES:
            cfg = ExperimentConfig(strategy=strategy)
            assert cfg.build_agents(48, 480)

    def test_ensemble6_composition(self):
        agents = ExperimentConfig(strategy="ensemble6").build_agents(48, 480)
        assert [a.name for a in agents] == ["ld1", "ral1", "ld2", "ral2",
                                            "spf1", "ral3"]
        assert isinstance(agents[0], LowDensityAgent)
        assert isinstance(agents[4], SpaceFillingAgent)
        for idx in (1, 3, 5):
            assert isinstance(agents[idx], EpsilonGreedyAgent)
            assert isinstance(agents[idx].inner, CertaintyThresholdAgent)
        assert agents[0].window.capacity == 100
        assert agents[2].window.capacity == 150
        assert agents[4].window.capacity == 60
        assert agents[1].inner.threshold == 0.95
        assert agents[1].inner.learning_rate == 0.005
        assert agents[5].inner.threshold == 0.90
        assert agents[5].inner.penalty == -0.5

    def test_exploration_agents_not_epsilon_wrapped(self):
        agents = ExperimentConfig(strategy="ensemble6").build_agents(48, 480)
        for idx in (0, 2, 4):
            assert not isinstance(agents[idx], EpsilonGreedyAgent)

    def test_random_baseline_rate_from_budget(self):
        agent, = ExperimentConfig(strategy="rs").build_agents(48, 480)
        assert isinstance(agent, RandomBaseline)
        assert agent.rate == pytest.approx(0.1)

    def test_uncertainty_baseline_threshold(self):
        agent, = ExperimentConfig(strategy="us").build_agents(48, 480)
        assert isinstance(agent, UncertaintyBaseline)
        assert agent.threshold == 0.7

    def test_single_expert_solver_passes_votes_through(self):
        solver = ExperimentConfig(strategy="ld1").solver_config(1)
        assert solver.resolved_p_min == 0.0


class TestStreamRunner:
    def test_budget_never_exceeded(self, split):
        metrics = StreamRunner(small_config("ensemble6"), 0, split).run()
        assert metrics.acquired <= split.budget
        for record in metrics.records:
            assert record.budget_used <= split.budget

    def test_budget_used_nondecreasing(self, split):
        metrics = StreamRunner(small_config("ensemble2"), 1, split).run()
        used = [r.budget_used for r in metrics.records]
        assert all(b - a in (0, 1) for a, b in zip(used, used[1:]))

    def test_actions_match_budget_accounting(self, split):
        metrics = StreamRunner(small_config("ensemble2"), 2, split).run()
        assert sum(r.action for r in metrics.records) == metrics.acquired

    def test_cumulative_reward_is_record_sum(self, split):
        metrics = StreamRunner(small_config("ensemble2"), 3, split).run()
        assert metrics.cumulative_reward == pytest.approx(
            sum(r.reward for r in metrics.records))

    def test_pass_steps_earn_nothing(self, split):
        metrics = StreamRunner(small_config("ensemble2"), 3, split).run()
        for record in metrics.records:
            if record.action == 0:
                assert record.reward == 0.0

    def test_evaluation_cadence(self, split):
        config = small_config("rs", eval_every=25)
        metrics = StreamRunner(config, 4, split).run()
        n_steps = split.stream_labels.shape[0]
        for record in metrics.records:
            expected = (record.t % 25 == 0) or (record.t == n_steps)
            assert (record.accuracy is not None) == expected

    def test_run_is_deterministic(self, split):
        first = StreamRunner(small_config("ensemble2"), 5, split).run()
        second = StreamRunner(small_config("ensemble2"), 5, split).run()
        assert first.records == second.records
        assert first.final_accuracy == second.final_accuracy
        assert first.acquired == second.acquired

    def test_seeds_differ(self, split):
        first = StreamRunner(small_config("rs"), 6, split).run()
        second = StreamRunner(small_config("rs"), 7, split).run()
        assert first.records != second.records

    def test_random_baseline_acquisition_band(self):
        """With a 10% budget the random baseline lands near 48 of 480 draws."""
        for seed in (0, 1, 2):
            metrics = run_experiment(small_config("rs"), seed)
            assert 28 <= metrics.acquired <= 68

    def test_positive_fraction_counts_acquired_positives(self, split):
        metrics = StreamRunner(small_config("rs"), 8, split).run()
        assert 0.0 <= metrics.positive_fraction <= 1.0
        assert metrics.n_experts == 1

    def test_weights_in_records_sum_to_one(self, split):
        metrics = StreamRunner(small_config("ensemble4"), 9, split).run()
        for record in metrics.records:
            assert len(record.weights) == 4
            assert sum(record.weights) == pytest.approx(1.0, abs=1e-9)

    def test_missing_oracle_label_raises(self, split):
        config = small_config("rs", p_min=0.0)
        runner = StreamRunner(config, 10, split)
        runner.agents[0].rate = 1.0
        with pytest.raises(RuntimeError, match="no label"):
            runner.step(split.stream_features[0], None)

    def test_initial_accuracy_from_seed_pool(self, split):
        runner = StreamRunner(small_config("rs"), 11, split)
        assert 0.0 <= runner.test_accuracy() <= 1.0
        assert len(runner.pool) == split.initial_labels.shape[0]


class TestReplication:
    def test_requires_two_seeds(self):
        with pytest.raises(ValueError, match="two seeds"):
            run_replications(small_config("rs"), [0])

    def test_summary_means_match_individual_runs(self):
        config = small_config("rs")
        summary = run_replications(config, (0, 1))
        singles = [run_experiment(config, s) for s in (0, 1)]
        accs = [r.final_accuracy for r in singles]
        assert summary.final_accuracy[0] == pytest.approx(np.mean(accs))
        assert summary.final_accuracy[1] == pytest.approx(
            np.std(accs, ddof=1) / np.sqrt(2))
        assert summary.acquired[0] == pytest.approx(
            np.mean([r.acquired for r in singles]))
        assert summary.seeds == (0, 1)
        assert len(summary.runs) == 2

    def test_summary_table_layout(self):
        config = small_config("rs")
        summary = run_replications(config, (0, 1))
        text = summary_table([summary])
        lines = text.strip().split("\n")
        assert lines[0] == ("strategy,n_seeds,final_accuracy_mean,"
                            "final_accuracy_se,acquired_mean,acquired_se,"
                            "positive_fraction_mean,positive_fraction_se,"
                            "cumulative_reward_mean,cumulative_reward_se")
        cells = lines[1].split(",")
        assert cells[0] == "rs"
        assert cells[1] == "2"
        assert float(cells[2]) == summary.final_accuracy[0]


class TestCsvStreamIO:
    def test_round_trip_through_interchange_format(self, tmp_path):
        data = generate(GeneratorConfig(n=40, p=3, seed=5))
        path = str(tmp_path / "data.csv")
        write_dataset_csv(Dataset(data.features, data.labels), path)
        features, labels = load_csv_stream(path)
        np.testing.assert_array_equal(features, data.features)
        np.testing.assert_array_equal(labels, data.labels)

    def test_header_names_features_in_order(self, tmp_path):
        data = generate(GeneratorConfig(n=40, p=3, seed=5))
        path = str(tmp_path / "data.csv")
        write_dataset_csv(Dataset(data.features, data.labels), path)
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
        assert header == "f1,f2,f3,label"

    def test_label_column_position_is_flexible(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("label,x1,x2\n1,0.5,2.0\n0,1.5,3.0\n", encoding="utf-8")
        features, labels = load_csv_stream(str(path))
        np.testing.assert_array_equal(features, [[0.5, 2.0], [1.5, 3.0]])
        np.testing.assert_array_equal(labels, [1, 0])

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(ValueError, match="empty file"):
            load_csv_stream(str(path))

    def test_missing_label_column_rejected(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("f1,f2\n1.0,2.0\n", encoding="utf-8")
        with pytest.raises(ValueError, match="no 'label' column"):
            load_csv_stream(str(path))

    def test_header_only_rejected(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("f1,label\n", encoding="utf-8")
        with pytest.raises(ValueError, match="no data rows"):
            load_csv_stream(str(path))

    def test_ragged_row_error_names_row(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("f1,f2,label\n1.0,2.0,1\n3.0,0\n", encoding="utf-8")
        with pytest.raises(ValueError, match="row 2"):
            load_csv_stream(str(path))

    def test_non_numeric_feature_error_names_row(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("f1,label\nok,1\n", encoding="utf-8")
        with pytest.raises(ValueError, match="row 1.*non-numeric"):
            load_csv_stream(str(path))

    def test_non_binary_label_rejected(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("f1,label\n1.0,2\n", encoding="utf-8")
        with pytest.raises(ValueError, match="label must be 0 or 1"):
            load_csv_stream(str(path))


class TestCaseStudySplit:
    def make_rows(self, n, p=2):
        features = np.arange(n * p, dtype=float).reshape(n, p)
        labels = (np.arange(n) % 2).astype(int)
        return features, labels

    def test_matches_wraparound_construction(self):
        n, seed = 100, 3
        features, labels = self.make_rows(n)
        split = case_study_split(features, labels, seed)
        rng = np.random.default_rng([seed, STAGE_CASE_SPLIT])
        start = int(rng.integers(n))
        test_idx = (start + np.arange(n // 3)) % n
        in_test = np.zeros(n, dtype=bool)
        in_test[test_idx] = True
        train_idx = np.flatnonzero(~in_test)
        np.testing.assert_array_equal(split.test_features, features[test_idx])
        np.testing.assert_array_equal(
            split.initial_features, features[train_idx[:CASE_STUDY_POOL_SIZE]])
        np.testing.assert_array_equal(
            split.stream_features, features[train_idx[CASE_STUDY_POOL_SIZE:]])

    def test_partition_sizes(self):
        features, labels = self.make_rows(90)
        split = case_study_split(features, labels, 0)
        assert split.test_labels.shape[0] == 30
        assert split.initial_labels.shape[0] == 10
        assert split.stream_labels.shape[0] == 50
        assert split.budget == round(0.10 * 50)

    def test_stream_keeps_original_order(self):
        features, labels = self.make_rows(120)
        split = case_study_split(features, labels, 7)
        first_col = split.stream_features[:, 0]
        assert np.all(np.diff(first_col) > 0)

    def test_partition_is_exact(self):
        features, labels = self.make_rows(75)
        split = case_study_split(features, labels, 5)
        seen = np.concatenate([split.initial_features[:, 0],
                               split.stream_features[:, 0],
                               split.test_features[:, 0]])
        assert sorted(seen.tolist()) == sorted(features[:, 0].tolist())

    def test_too_few_rows_rejected(self):
        features, labels = self.make_rows(29)
        with pytest.raises(ValueError, match="at least 30"):
            case_study_split(features, labels, 0)

    def test_initial_pool_cannot_swallow_stream(self):
        features, labels = self.make_rows(30)
        with pytest.raises(ValueError, match="nothing left"):
            case_study_split(features, labels, 0, initial_size=25)

    def test_budget_fraction_validated(self):
        features, labels = self.make_rows(60)
        with pytest.raises(ValueError, match="budget fraction"):
            case_study_split(features, labels, 0, budget_fraction=0.0)

    def test_deterministic_per_seed(self):
        features, labels = self.make_rows(80)
        one = case_study_split(features, labels, 4)
        two = case_study_split(features, labels, 4)
        np.testing.assert_array_equal(one.test_features, two.test_features)
        np.testing.assert_array_equal(one.stream_features, two.stream_features)


class TestExportResults:
    def test_metrics_csv_layout(self, metrics, tmp_path):
        paths = export_results(metrics, str(tmp_path))
        with open(paths["metrics"], newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["t", "action", "reward", "budget_used",
                           "test_accuracy"]
        assert len(rows) - 1 == len(metrics.records)
        for row, record in zip(rows[1:], metrics.records):
            assert int(row[0]) == record.t
            assert int(row[1]) == record.action
            assert float(row[2]) == record.reward
            assert int(row[3]) == record.budget_used
            if record.accuracy is None:
                assert row[4] == ""
            else:
                assert float(row[4]) == record.accuracy

    def test_trajectory_csv_layout(self, metrics, tmp_path):
        paths = export_results(metrics, str(tmp_path))
        with open(paths["trajectory"], newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["t", "alpha_s_1", "alpha_s_2", "flipped"]
        for row in rows[1:]:
            weights = [float(c) for c in row[1:3]]
            assert sum(weights) == pytest.approx(1.0, abs=1e-9)
            assert row[3] in ("0", "1")

    def test_summary_json_contents(self, metrics, tmp_path):
        paths = export_results(metrics, str(tmp_path))
        with open(paths["summary"], encoding="utf-8") as fh:
            summary = json.load(fh)
        assert set(summary) == {"strategy", "seed", "final_accuracy",
                                "acquired", "positive_fraction",
                                "cumulative_reward", "mean_step_seconds"}
        assert summary["strategy"] == "ensemble2"
        assert summary["seed"] == 0
        assert summary["final_accuracy"] == metrics.final_accuracy
        assert summary["acquired"] == metrics.acquired
        assert summary["cumulative_reward"] == metrics.cumulative_reward

    def test_repeat_runs_export_identical_bytes(self, tmp_path):
        """Two runs of the same seeded config agree byte for byte on every
        output except the wall-clock timing field."""
        config = small_config("ensemble2")
        dirs = []
        for name in ("a", "b"):
            out = tmp_path / name
            export_results(run_experiment(config, 0), str(out))
            dirs.append(out)
        for filename in ("metrics.csv", "trajectory.csv"):
            first = (dirs[0] / filename).read_bytes()
            second = (dirs[1] / filename).read_bytes()
            assert first == second
        summaries = [json.loads((d / "summary.json").read_text()) for d in dirs]
        for s in summaries:
            s.pop("mean_step_seconds")
        assert summaries[0] == summaries[1]

    def test_empty_run_exports_header_only(self, tmp_path):
        empty = RunMetrics(strategy="rs", seed=0, n_experts=1,
                           initial_accuracy=0.5, final_accuracy=0.5,
                           acquired=0, positive_fraction=0.0,
                           cumulative_reward=0.0, mean_step_seconds=0.0,
                           records=[])
        paths = export_results(empty, str(tmp_path))
        with open(paths["metrics"], encoding="utf-8") as fh:
            assert fh.read() == "t,action,reward,budget_used,test_accuracy\n"

    def test_no_temp_files_left_behind(self, metrics, tmp_path):
        export_results(metrics, str(tmp_path))
        leftovers = [f for f in os.listdir(tmp_path) if f.endswith(".tmp")]
        assert leftovers == []


class TestLearnerConfigThroughHarness:
    def test_learner_settings_reach_the_model(self):
        config = small_config("rs", learner=LearnerConfig(penalty="l2",
                                                          strength=0.1))
        metrics = run_experiment(config, 0)
        assert 0.0 <= metrics.final_accuracy <= 1.0
