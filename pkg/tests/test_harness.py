"""Harness tests: metric math, reports, plots, oracle, campaign mechanics."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from pinchisac.config import default_experiment_config
from pinchisac.env import default_system_config
from pinchisac.harness import (
    EVAL_COLUMNS,
    TRAIN_COLUMNS,
    OracleIntractable,
    RunKey,
    RunRecord,
    StaticScenario,
    campaign_keys,
    compare_report,
    emit_plots,
    evaluate_checkpoint,
    grid_search_oracle,
    load_records,
    moving_average,
    normalize_metrics,
    read_plot_data,
    run_campaign,
    run_single,
)
from pinchisac.physics import Position3D


def tiny_experiment(tmp_path, **overrides):
    """A seconds-scale experiment config for campaign mechanics tests."""
    base = {
        "training.algorithms": "random",
        "training.episodes": "6",
        "training.seeds": "0,1",
        "training.eval_every_episodes": "3",
        "training.eval_episodes": "2",
        "training.hidden_sizes": "16,16",
        "training.warmup_transitions": "64",
        "training.batch_size": "32",
        "system.slots_per_episode": "20",
        "output.out_dir": str(tmp_path / "runs"),
    }
    base.update(overrides)
    return default_experiment_config(**base)


# =====================================================================
# Metric arithmetic
# =====================================================================

class TestMovingAverage:
    def test_window_one_is_identity(self):
        xs = np.array([3.0, -1.0, 2.5, 7.0])
        assert np.array_equal(moving_average(xs, 1), xs)

    def test_ramp_window_ten(self):
        xs = np.arange(1.0, 101.0)
        ma = moving_average(xs, 10)
        # hand-computed: first entries average the short prefix, then the
        # trailing ten values
        assert ma[0] == 1.0
        assert ma[1] == 1.5
        assert ma[9] == pytest.approx(np.mean(np.arange(1, 11)))
        assert ma[99] == pytest.approx(np.mean(np.arange(91, 101)))

    def test_constant_series_flat(self):
        ma = moving_average(np.full(50, 4.2), 7)
        assert np.allclose(ma, 4.2, rtol=0, atol=1e-12)

    def test_bad_window_rejected(self):
        with pytest.raises(ValueError):
            moving_average(np.ones(3), 0)


class TestNormalize:
    def test_endpoints(self):
        normalized, degenerate = normalize_metrics({"a": 2.0, "b": 4.0})
        assert normalized == {"a": 0.0, "b": 1.0}
        assert not degenerate

    def test_degenerate_flagged(self):
        normalized, degenerate = normalize_metrics({"a": 3.0, "b": 3.0, "c": 3.0})
        assert degenerate
        assert set(normalized.values()) == {0.5}

    def test_order_preserving(self):
        rng = np.random.default_rng(0)
        values = {f"r{i}": float(v) for i, v in enumerate(rng.normal(size=10))}
        normalized, _ = normalize_metrics(values)
        raw_order = sorted(values, key=values.get)
        norm_order = sorted(normalized, key=normalized.get)
        assert raw_order == norm_order
        assert all(0.0 <= v <= 1.0 for v in normalized.values())

    def test_needs_two_runs(self):
        with pytest.raises(ValueError):
            normalize_metrics({"a": 1.0})


# =====================================================================
# Comparison report on synthetic records
# =====================================================================

def synthetic_record(tmp_path, algo, seed, eval_rewards, eval_rates=None,
                     eval_snrs=None):
    episodes = np.arange(1, len(eval_rewards) + 1) * 10.0
    rates = eval_rates if eval_rates is not None else eval_rewards
    snrs = eval_snrs if eval_snrs is not None else eval_rewards
    return RunRecord(
        key=RunKey(algo, 1e-4, seed),
        run_dir=tmp_path / f"{algo}_{seed}",
        status="completed",
        train={"episode": episodes, "reward": np.asarray(eval_rewards, dtype=float)},
        evals={"episode": episodes,
               "eval_reward": np.asarray(eval_rewards, dtype=float),
               "eval_sum_rate": np.asarray(rates, dtype=float),
               "eval_mean_snr_linear": np.asarray(snrs, dtype=float)},
        checkpoint_dir=None,
        wall_clock_s=None,
    )


class TestCompareReport:
    def exp(self, tmp_path):
        return default_experiment_config(**{
            "training.episodes": "100",
            "output.out_dir": str(tmp_path),
        })

    def test_dominating_algorithm_reports_positive_improvements(self, tmp_path):
        records = []
        for seed in range(3):
            records.append(synthetic_record(tmp_path, "merl", seed,
                                            [8.0, 9.0, 10.0 + seed] * 4))
            records.append(synthetic_record(tmp_path, "td3", seed,
                                            [4.0, 5.0, 5.0 + seed] * 4))
        text, data = compare_report(records, self.exp(tmp_path))
        for imp in data["improvements"]:
            if imp["better"] == "merl":
                assert imp["percent"] > 0
        assert "paper-reported, not asserted" in text

    def test_identical_records_zero_improvement(self, tmp_path):
        records = [synthetic_record(tmp_path, "merl", s, [5.0] * 6) for s in range(2)]
        records += [synthetic_record(tmp_path, "td3", s, [5.0] * 6) for s in range(2)]
        _, data = compare_report(records, self.exp(tmp_path))
        for imp in data["improvements"]:
            assert imp["percent"] == 0.0
        assert all(data["degenerate"].values())

    def test_improvements_invariant_to_common_rescale(self, tmp_path):
        def build(scale):
            records = []
            for seed in range(2):
                records.append(synthetic_record(
                    tmp_path, "merl", seed, [scale * v for v in (6.0, 7.0, 8.0)]))
                records.append(synthetic_record(
                    tmp_path, "ddpg", seed, [scale * v for v in (3.0, 4.0, 5.0)]))
            return records
        _, d1 = compare_report(build(1.0), self.exp(tmp_path))
        _, d7 = compare_report(build(7.0), self.exp(tmp_path))
        for a, b in zip(d1["improvements"], d7["improvements"]):
            assert a["percent"] == pytest.approx(b["percent"], rel=1e-12)

    def test_rank_test_present_with_multiple_seeds(self, tmp_path):
        records = [synthetic_record(tmp_path, "merl", s, [9.0 + s, 10.0, 11.0])
                   for s in range(3)]
        records += [synthetic_record(tmp_path, "random", s, [1.0 + s, 2.0, 1.5])
                    for s in range(3)]
        text, data = compare_report(records, self.exp(tmp_path))
        assert data["rank_test"] is not None
        assert data["rank_test"]["p_value"] < 0.05
        assert "p=" in text

    def test_single_seed_skips_rank_test(self, tmp_path):
        records = [synthetic_record(tmp_path, "merl", 0, [9.0, 10.0]),
                   synthetic_record(tmp_path, "random", 0, [1.0, 2.0])]
        text, data = compare_report(records, self.exp(tmp_path))
        assert data["rank_test"] is None
        assert "skipped" in text

    def test_reference_values_echoed(self, tmp_path):
        records = [synthetic_record(tmp_path, a, s, [float(s + i) for i in range(3)])
                   for a in ("merl", "td3", "ddpg") for s in range(2)]
        text, _ = compare_report(records, self.exp(tmp_path))
        assert "+20.3%" in text and "+44.4%" in text and "+16.7%" in text


# =====================================================================
# Plot emission
# =====================================================================

class TestEmitPlots:
    def test_data_files_round_trip_and_svgs_exist(self, tmp_path):
        exp = default_experiment_config(**{
            "training.episodes": "30",
            "output.out_dir": str(tmp_path),
            "output.moving_average_window": "5",
        })
        rng = np.random.default_rng(1)
        records = []
        for algo in ("merl", "random"):
            for seed in range(2):
                rewards = rng.normal(size=30).cumsum()
                record = synthetic_record(tmp_path, algo, seed, list(rewards[:6]))
                record.train = {"episode": np.arange(1.0, 31.0),
                                "reward": rewards}
                records.append(record)
        created = emit_plots(records, exp)
        svgs = [p for p in created if p.suffix == ".svg"]
        dats = [p for p in created if p.suffix == ".dat"]
        assert svgs and dats
        for dat in dats:
            if dat.name.startswith("reward_"):
                columns = read_plot_data(dat)
                name = dat.stem.replace("reward_", "")
                record = next(r for r in records if r.key.name == name)
                assert np.array_equal(columns["episode"], record.train["episode"])
                assert np.array_equal(columns["reward"], record.train["reward"])
                assert np.array_equal(columns["moving_average"],
                                      moving_average(record.train["reward"], 5))

    def test_lr_sweep_figure_when_multiple_rates(self, tmp_path):
        exp = default_experiment_config(**{
            "training.episodes": "10",
            "output.out_dir": str(tmp_path),
        })
        rng = np.random.default_rng(2)
        records = []
        for lr in (1e-3, 1e-4, 1e-5):
            record = synthetic_record(tmp_path, "merl", 0, [1.0, 2.0])
            record.key = RunKey("merl", lr, 0)
            record.train = {"episode": np.arange(1.0, 11.0),
                            "reward": rng.normal(size=10)}
            records.append(record)
        created = emit_plots(records, exp)
        names = {p.name for p in created}
        assert "lr_sweep.dat" in names and "lr_sweep.svg" in names
        columns = read_plot_data(tmp_path / "figures" / "lr_sweep.dat")
        assert "lr0.001" in columns and "lr1e-05" in columns


# =====================================================================
# Grid-search oracle
# =====================================================================

class TestGridSearchOracle:
    def test_single_antenna_matches_analytic_optimum(self):
        config = default_system_config(num_antennas=1, num_users=1)
        user = Position3D(23.4, 18.0, 0.0)
        scenario = StaticScenario(user=user, target=None,
                                  enforce_snr_constraint=False)
        resolution = 0.5
        result = grid_search_oracle(scenario, config, resolution, power_levels=11)
        # rate is maximized where the 3-D distance is; that is x = user.x
        assert abs(result.layout.xs[0] - user.x) <= resolution
        assert result.power_w == config.max_user_power_w

    def test_power_saturates_when_constraint_inactive(self):
        config = default_system_config(num_antennas=1, num_users=1)
        scenario = StaticScenario(user=Position3D(-40.0, 4.0, 0.0), target=None,
                                  enforce_snr_constraint=False)
        result = grid_search_oracle(scenario, config, 2.0, power_levels=6)
        assert result.power_w == config.max_user_power_w

    def test_nested_grid_never_worse(self):
        config = default_system_config(num_antennas=1, num_users=1)
        scenario = StaticScenario(user=Position3D(11.0, 9.0, 0.0), target=None,
                                  enforce_snr_constraint=False)
        coarse = grid_search_oracle(scenario, config, 2.0, power_levels=5)
        fine = grid_search_oracle(scenario, config, 1.0, power_levels=5)
        assert fine.rate >= coarse.rate - 1e-12

    def test_snr_constraint_filters_layouts(self):
        # target close to the guide, user far: the threshold is attainable
        # near the target but costs rate relative to the unconstrained optimum
        config = default_system_config(num_antennas=1, num_users=1)
        user = Position3D(50.0, 60.0, 0.0)
        target = Position3D(0.0, 2.0, 0.0)
        constrained = grid_search_oracle(
            StaticScenario(user=user, target=target), config, 5.0)
        free = grid_search_oracle(
            StaticScenario(user=user, target=target,
                           enforce_snr_constraint=False), config, 5.0)
        assert constrained.snr_linear >= config.snr_threshold_linear
        assert free.rate >= constrained.rate

    def test_infeasible_constraint_reported(self):
        # user glued to the guide, target far away: no layout can meet the
        # threshold, which must surface as an error rather than a bad answer
        config = default_system_config(num_antennas=1, num_users=1)
        scenario = StaticScenario(user=Position3D(0.0, 2.0, 0.0),
                                  target=Position3D(50.0, 60.0, 0.0))
        with pytest.raises(ValueError, match="feasible"):
            grid_search_oracle(scenario, config, 5.0)

    def test_intractable_grid_refused_with_estimate(self):
        config = default_system_config()  # N=3
        scenario = StaticScenario(user=Position3D(0, 0, 0), target=None,
                                  enforce_snr_constraint=False)
        with pytest.raises(OracleIntractable, match=r"\d+ evaluations"):
            grid_search_oracle(scenario, config, 0.05)

    def test_respects_minimum_spacing(self):
        config = default_system_config(num_antennas=3, num_users=1)
        scenario = StaticScenario(user=Position3D(5.0, 3.0, 0.0), target=None,
                                  enforce_snr_constraint=False)
        result = grid_search_oracle(scenario, config, 10.0, power_levels=3)
        gaps = np.diff(result.layout.xs)
        assert np.all(gaps >= config.waveguide.min_spacing_m)


# =====================================================================
# Campaign mechanics
# =====================================================================

class TestCampaign:
    def test_random_agent_run_structure(self, tmp_path):
        exp = tiny_experiment(tmp_path, **{"training.seeds": "0"})
        records = run_campaign(exp)
        assert len(records) == 1
        record = records[0]
        assert record.status == "completed"
        assert record.train["episode"].size == 6
        assert list(record.train) == list(TRAIN_COLUMNS)
        assert list(record.evals) == list(EVAL_COLUMNS)
        assert record.evals["episode"].size == 2  # episodes 3 and 6
        assert record.checkpoint_dir is None  # random agent: manifest only

    def test_cartesian_campaign(self, tmp_path):
        exp = tiny_experiment(tmp_path, **{
            "training.algorithms": "random,ddpg",
            "training.seeds": "0,1,2",
        })
        records = run_campaign(exp)
        assert len(records) == 6
        names = {r.key.name for r in records}
        assert len(names) == 6

    def test_rerun_is_byte_identical(self, tmp_path):
        exp = tiny_experiment(tmp_path, **{
            "training.algorithms": "merl",
            "training.seeds": "3",
            "training.warmup_transitions": "32",
        })
        key = campaign_keys(exp)[0]
        run_single(exp, key, resume=False)
        first = {name: (Path(exp.out_dir) / key.name / name).read_bytes()
                 for name in ("train.csv", "eval.csv")}
        run_single(exp, key, resume=False)
        second = {name: (Path(exp.out_dir) / key.name / name).read_bytes()
                  for name in ("train.csv", "eval.csv")}
        assert first == second

    def test_resume_reuses_completed_run(self, tmp_path):
        exp = tiny_experiment(tmp_path, **{"training.seeds": "0"})
        key = campaign_keys(exp)[0]
        run_single(exp, key, resume=False)
        manifest_path = Path(exp.out_dir) / key.name / "manifest.json"
        stamp = manifest_path.stat().st_mtime_ns
        run_single(exp, key, resume=True)
        assert manifest_path.stat().st_mtime_ns == stamp  # untouched

    def test_learning_rate_sweep_expands_keys(self, tmp_path):
        exp = tiny_experiment(tmp_path, **{
            "training.algorithms": "merl",
            "training.seeds": "0",
            "training.learning_rate_sweep": "1e-3,1e-4",
        })
        keys = campaign_keys(exp)
        assert {k.learning_rate for k in keys} == {1e-3, 1e-4}

    def test_load_records_round_trip(self, tmp_path):
        exp = tiny_experiment(tmp_path)
        run_campaign(exp)
        records = load_records(exp.out_dir)
        assert len(records) == 2
        for record in records:
            assert record.train["reward"].size == 6

    def test_checkpoint_evaluation(self, tmp_path):
        exp = tiny_experiment(tmp_path, **{
            "training.algorithms": "ddpg",
            "training.seeds": "0",
            "training.warmup_transitions": "32",
        })
        records = run_campaign(exp)
        assert records[0].checkpoint_dir is not None
        result = evaluate_checkpoint(exp, records[0].checkpoint_dir,
                                     episodes=2, seed=5)
        assert result["algorithm"] == "ddpg"
        assert math.isfinite(result["eval_reward"])

    def test_metrics_parse_back_exactly(self, tmp_path):
        exp = tiny_experiment(tmp_path, **{"training.seeds": "0"})
        record = run_campaign(exp)[0]
        # repr-formatted floats round-trip bit-exactly through the CSV
        text = (record.run_dir / "train.csv").read_text().splitlines()
        header = text[0].split(",")
        first = dict(zip(header, text[1].split(",")))
        assert float(first["reward"]) == record.train["reward"][0]

    def test_parallel_campaign_matches_sequential(self, tmp_path):
        exp_a = tiny_experiment(tmp_path / "a", **{
            "training.algorithms": "random", "training.seeds": "0,1"})
        exp_b = tiny_experiment(tmp_path / "b", **{
            "training.algorithms": "random", "training.seeds": "0,1"})
        run_campaign(exp_a, workers=1)
        run_campaign(exp_b, workers=2)
        for key in campaign_keys(exp_a):
            a = (Path(exp_a.out_dir) / key.name / "train.csv").read_bytes()
            b = (Path(exp_b.out_dir) / key.name / "train.csv").read_bytes()
            assert a == b
