import csv

import pytest

from cropmarl.bench import (
    RESULT_COLUMNS,
    ConfigError,
    config_from_dict,
    desk_greenhouse_model,
    read_results,
    run_experiment,
    write_results,
)
from cropmarl.mdp import validate_model


def small_config(**overrides):
    doc = {
        "experiment": "joint-reward",
        "policies": ["iql"],
        "agent_counts": [2],
        "seeds": [7],
        "horizon": 6,
        "eval_seeds": 4,
        "iql": {"episodes": 30},
    }
    doc.update(overrides)
    return config_from_dict(doc)


class TestConfig:
    def test_defaults_mirror_desk_scale(self):
        config = config_from_dict({})
        assert config.experiment == "joint-reward"
        assert config.horizon == 12
        assert config.slope_coefficients == [500.0]
        assert config.gammas == [0.9]
        assert config.eval_seed_count == 16
        assert config.iql["episodes"] == 500

    def test_paper_scale_defaults(self):
        config = config_from_dict({}, paper_scale=True)
        assert config.horizon == 26
        assert config.agent_counts == [5, 10, 15, 20]
        assert config.iql["episodes"] == 1000

    def test_explicit_fields_beat_paper_scale(self):
        config = config_from_dict({"horizon": 10}, paper_scale=True)
        assert config.horizon == 10

    def test_runtime_defaults(self):
        config = config_from_dict({"experiment": "runtime"})
        assert config.horizon == 8
        assert config.model["kind"] == "random-mdp"

    @pytest.mark.parametrize("doc,field", [
        ({"experiment": "nope"}, "experiment"),
        ({"policies": []}, "policies"),
        ({"policies": ["dqn"]}, "policies"),
        ({"seeds": []}, "seeds"),
        ({"agent_counts": [0]}, "agent_counts"),
        ({"gamma": 1.5}, "gamma"),
        ({"gamma": [0.3, 0.6]}, "gamma"),
        ({"slope_coefficients": -5}, "slope_coefficients"),
        ({"model": {"kind": "martian"}}, "model.kind"),
        ({"experiment": "runtime", "model": {"kind": "greenhouse"}}, "model.kind"),
        ({"horizon": 0}, "horizon"),
        ({"eval_seeds": 0}, "eval_seeds"),
        ({"iql": {"gamma": 0.5}}, "iql.gamma"),
        ({"aba": {"seed": 3}}, "aba.seed"),
        ({"model": {"kind": "greenhouse", "crops": []}}, "model.crops"),
    ])
    def test_invalid_config_names_field(self, doc, field):
        with pytest.raises(ConfigError, match=field.replace(".", "\\.")):
            config_from_dict(doc)


class TestRunExperiment:
    def test_row_count_arithmetic(self):
        rows = run_experiment(small_config())
        # 2 per-agent rows + 1 aggregate row
        assert len(rows) == 3
        assert [r.agent_id for r in rows] == [0, 1, -1]

    def test_discount_sweep_grid(self):
        config = config_from_dict({
            "experiment": "discount-sweep",
            "policies": ["iql"],
            "agent_counts": [1],
            "gamma": [0.3, 0.6, 0.9],
            "seeds": [0],
            "horizon": 5,
            "eval_seeds": 2,
            "iql": {"episodes": 20},
        })
        rows = run_experiment(config)
        aggregates = [r for r in rows if r.agent_id == -1]
        assert len(aggregates) == 3
        assert [r.gamma for r in aggregates] == [0.3, 0.6, 0.9]
        assert len(rows) == 6  # one per-agent row + aggregate per gamma

    def test_aggregate_total_is_sum_of_per_agent_returns(self):
        config = small_config(policies=["iql", "aba", "rollout"])
        rows = run_experiment(config)
        for policy in ("iql", "aba", "rollout"):
            per = [r.total_reward for r in rows if r.policy == policy and r.agent_id >= 0]
            agg = [r for r in rows if r.policy == policy and r.agent_id == -1]
            assert len(agg) == 1
            assert agg[0].total_reward == pytest.approx(sum(per), abs=1e-9)

    def test_non_timing_fields_are_pure_functions_of_config(self):
        config = small_config(policies=["iql", "aba", "rollout"])
        rows1 = run_experiment(config)
        rows2 = run_experiment(small_config(policies=["iql", "aba", "rollout"]))
        assert len(rows1) == len(rows2)
        for a, b in zip(rows1, rows2):
            assert (a.experiment, a.policy, a.n_agents, a.gamma, a.seed, a.agent_id) == \
                   (b.experiment, b.policy, b.n_agents, b.gamma, b.seed, b.agent_id)
            assert a.return_ == b.return_
            assert a.total_reward == b.total_reward
            assert a.welfare == b.welfare

    def test_thread_cap_does_not_change_results(self, monkeypatch):
        config = small_config(seeds=[1, 2])
        sequential = run_experiment(config)
        monkeypatch.setenv("MARL_THREADS", "2")
        threaded = run_experiment(small_config(seeds=[1, 2]))
        assert [(r.seed, r.agent_id, r.return_) for r in sequential] == \
               [(r.seed, r.agent_id, r.return_) for r in threaded]


class TestWriteResults:
    def test_empty_rows_give_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        write_results([], path)
        assert path.read_text() == ",".join(RESULT_COLUMNS) + "\n"

    def test_round_trip_reproduces_rows(self, tmp_path):
        rows = run_experiment(small_config())
        path = tmp_path / "results.csv"
        write_results(rows, path)
        back = read_results(path)
        assert back == rows

    def test_reruns_byte_identical_except_runtime(self, tmp_path):
        p1, p2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
        write_results(run_experiment(small_config()), p1)
        write_results(run_experiment(small_config()), p2)

        def strip_runtime(path):
            with open(path, newline="") as fh:
                return ["\t".join(rec[:-1]) for rec in csv.reader(fh)]

        assert strip_runtime(p1) == strip_runtime(p2)

    def test_header_matches_result_row_columns(self, tmp_path):
        path = tmp_path / "results.csv"
        write_results([], path)
        with open(path, newline="") as fh:
            header = next(csv.reader(fh))
        assert header == ["experiment", "policy", "n_agents", "gamma",
                          "slope_coefficient", "seed", "agent_id", "return",
                          "total_reward", "welfare", "runtime_ms"]


def test_desk_greenhouse_model_is_valid():
    m = desk_greenhouse_model(5, 12, 500.0)
    assert validate_model(m) == []
    assert m.n_agents == 5
    assert m.horizon == 12
