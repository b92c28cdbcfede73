import csv
import json

import pytest
import yaml
from click.testing import CliRunner

from mgsizer import cli
from mgsizer.dispatch import InvariantViolation

FAST_CONFIG = {
    "devices": {"dg": {"p_rated": 300.0, "p_min": 10.0}},
    "grid": {"import_cap": 0, "export_cap": 0},
    "bounds": {"n_wt": 3, "n_pv": 3, "n_dg": 1, "n_es": 3},
    "scenarios": {
        "n_samples": 40,
        "k_per_dimension": 2,
        "subsample_sizes": [4],
        "load": {"means": [100.0] * 24, "sd_fraction": 0.1,
                 "lower": 0.0, "upper": 5000.0},
    },
    "ga": {"pop_size": 10, "max_iter": 8},
    "compare": {"repetitions": 2, "scenario_sizes": [4],
                "algorithms": ["samoga", "nsga2"]},
}


@pytest.fixture(scope="module")
def fast_config_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "fast.yaml"
    path.write_text(yaml.safe_dump(FAST_CONFIG))
    return str(path)


@pytest.fixture
def runner():
    return CliRunner()


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestScenariosCmd:
    def test_writes_full_set_and_subsamples(self, runner, fast_config_path,
                                            tmp_path):
        out = tmp_path / "o"
        result = runner.invoke(cli.main, ["scenarios", "--config",
                                          fast_config_path, "--out", str(out)])
        assert result.exit_code == 0, result.output
        rows = read_rows(out / "scenarios_full.csv")
        assert len(rows) - 1 == 8  # 2^3 product set
        probs = [float(r[-1]) for r in rows[1:]]
        assert abs(sum(probs) - 1.0) < 1e-9
        assert (out / "scenarios_full.json").exists()
        assert len(read_rows(out / "scenarios_4.csv")) - 1 == 4
        assert (out / "effective_config.yaml").exists()

    def test_default_settings_yield_125(self, runner, tmp_path):
        # keep sampling small but the reduction at its default width
        doc = {"scenarios": {"n_samples": 30, "subsample_sizes": [10]}}
        cfg = tmp_path / "c.yaml"
        cfg.write_text(yaml.safe_dump(doc))
        out = tmp_path / "o"
        result = runner.invoke(cli.main, ["scenarios", "--config", str(cfg),
                                          "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert len(read_rows(out / "scenarios_full.csv")) - 1 == 125

    def test_byte_identical_across_runs(self, runner, fast_config_path,
                                        tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            result = runner.invoke(
                cli.main, ["scenarios", "--config", fast_config_path,
                           "--seed", "9", "--out", str(out)])
            assert result.exit_code == 0, result.output
            outs.append((out / "scenarios_full.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_config_echo_reloads_identically(self, runner, fast_config_path,
                                             tmp_path):
        from mgsizer.config import load_config

        out = tmp_path / "o"
        result = runner.invoke(cli.main, ["scenarios", "--config",
                                          fast_config_path, "--out", str(out)])
        assert result.exit_code == 0, result.output
        echoed = load_config(out / "effective_config.yaml")
        assert echoed.data == load_config(fast_config_path).data


class TestOptimizeCmd:
    def test_frontier_schema_and_history(self, runner, fast_config_path,
                                         tmp_path):
        out = tmp_path / "o"
        result = runner.invoke(
            cli.main, ["optimize", "--config", fast_config_path,
                       "--seed", "3", "--out", str(out)])
        assert result.exit_code == 0, result.output
        rows = read_rows(out / "frontier_samoga.csv")
        assert rows[0] == ["solution", "cost", "pec", "wt", "dg", "bess", "pv"]
        assert len(rows) > 1
        hist = read_rows(out / "history_samoga.csv")
        assert hist[0] == ["iteration", "best_fitness", "P_c", "P_m"]
        assert len(hist) - 1 == FAST_CONFIG["ga"]["max_iter"]
        metrics = json.loads((out / "metrics_samoga.json").read_text())
        assert metrics["frontier_size"] == len(rows) - 1
        assert metrics["feasible"] is True
        assert metrics["largest_ora"] > 0

    @pytest.mark.parametrize("algo", ["nsga2", "nsga-hs", "aga"])
    def test_all_algorithms_runnable(self, runner, fast_config_path,
                                     tmp_path, algo):
        out = tmp_path / "o"
        result = runner.invoke(
            cli.main, ["optimize", "--config", fast_config_path,
                       "--algorithm", algo, "--out", str(out)])
        assert result.exit_code == 0, result.output
        name = algo.replace("-", "_")
        assert (out / f"frontier_{name}.csv").exists()
        assert (out / f"metrics_{name}.json").exists()

    def test_deterministic_frontier_bytes(self, runner, fast_config_path,
                                          tmp_path):
        blobs = []
        for name in ("a", "b"):
            out = tmp_path / name
            result = runner.invoke(
                cli.main, ["optimize", "--config", fast_config_path,
                           "--seed", "17", "--out", str(out)])
            assert result.exit_code == 0, result.output
            blobs.append((out / "frontier_samoga.csv").read_bytes())
        assert blobs[0] == blobs[1]

    def test_frontier_cost_sorted_pec_nonincreasing(self, runner,
                                                    fast_config_path,
                                                    tmp_path):
        out = tmp_path / "o"
        result = runner.invoke(
            cli.main, ["optimize", "--config", fast_config_path,
                       "--seed", "5", "--out", str(out)])
        assert result.exit_code == 0, result.output
        rows = read_rows(out / "frontier_samoga.csv")[1:]
        costs = [float(r[1]) for r in rows]
        pecs = [float(r[2]) for r in rows]
        assert costs == sorted(costs)
        for earlier, later in zip(pecs, pecs[1:]):
            assert later <= earlier


class TestEvaluateCmd:
    def test_outputs_and_balance(self, runner, fast_config_path, tmp_path):
        out = tmp_path / "o"
        result = runner.invoke(
            cli.main, ["evaluate", "--config", fast_config_path,
                       "--out", str(out), "2", "0", "1", "2"])
        assert result.exit_code == 0, result.output
        doc = json.loads((out / "objectives.json").read_text())
        assert doc["config"] == {"wt": 2, "pv": 0, "dg": 1, "bess": 2}
        assert doc["objectives"]["feasible"] is True
        bd = doc["cost_breakdown"]
        recomposed = (bd["initial"] + bd["om"] + bd["dg_fuel"]
                      + bd["grid_buy"] - bd["grid_sell"] + bd["degradation"])
        assert recomposed == pytest.approx(bd["total"], rel=1e-9)
        traces = sorted(out.glob("trace_s*.csv"))
        assert len(traces) == 8
        rows = read_rows(traces[0])
        assert rows[0][:4] == ["t", "load_kw", "wt_kw", "pv_kw"]
        assert len(rows) - 1 == 24

    def test_capacity_series_sawtooth(self, runner, fast_config_path,
                                      tmp_path):
        out = tmp_path / "o"
        result = runner.invoke(
            cli.main, ["evaluate", "--config", fast_config_path,
                       "--out", str(out), "3", "0", "1", "1"])
        assert result.exit_code == 0, result.output
        rows = read_rows(out / "capacity_series.csv")[1:]
        assert len(rows) == 365 + 1
        capacity = [float(r[2]) for r in rows]
        replacements = [int(r[3]) for r in rows]
        for i in range(1, len(rows)):
            if replacements[i] == replacements[i - 1]:
                assert capacity[i] <= capacity[i - 1] + 1e-12
            else:
                assert capacity[i] > capacity[i - 1]

    def test_fade_toggle_changes_cost(self, runner, fast_config_path,
                                      tmp_path):
        out = tmp_path / "o"
        result = runner.invoke(
            cli.main, ["evaluate", "--config", fast_config_path,
                       "--out", str(out), "2", "0", "1", "2"])
        assert result.exit_code == 0, result.output
        doc = json.loads((out / "objectives.json").read_text())
        cmp = doc["degradation_comparison"]
        assert cmp["difference"] > 0
        assert cmp["cost_with_fade"] == doc["objectives"]["cost"]

    def test_no_battery_skips_capacity_series(self, runner, fast_config_path,
                                              tmp_path):
        out = tmp_path / "o"
        result = runner.invoke(
            cli.main, ["evaluate", "--config", fast_config_path,
                       "--out", str(out), "2", "0", "1", "0"])
        assert result.exit_code == 0, result.output
        assert not (out / "capacity_series.csv").exists()


class TestCompareCmd:
    def test_report_matrices(self, runner, fast_config_path, tmp_path):
        out = tmp_path / "o"
        result = runner.invoke(
            cli.main, ["compare", "--config", fast_config_path,
                       "--seed", "2", "--out", str(out)])
        assert result.exit_code == 0, result.output
        report = json.loads((out / "comparison.json").read_text())
        n_sizes = len(FAST_CONFIG["compare"]["scenario_sizes"])
        n_algos = len(FAST_CONFIG["compare"]["algorithms"])
        for metric in ("largest_ora", "diverse_count_cost",
                       "diverse_count_pec", "frontier_size"):
            mean = report[metric]["mean"]
            assert len(mean) == n_sizes
            assert all(len(row) == n_algos for row in mean)
            samples = report[metric]["samples"]["4"]["samoga"]
            assert len(samples) == FAST_CONFIG["compare"]["repetitions"]


class TestExitCodes:
    def test_unknown_config_key_exits_2(self, runner, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("sede: 3\n")
        result = runner.invoke(cli.main, ["scenarios", "--config", str(bad),
                                          "--out", str(tmp_path / "o")])
        assert result.exit_code == 2
        assert "config error" in result.output

    def test_bad_value_exits_2(self, runner, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("ga:\n  pop_size: 7\n")  # odd population
        result = runner.invoke(cli.main, ["optimize", "--config", str(bad),
                                          "--out", str(tmp_path / "o")])
        assert result.exit_code == 2

    def test_missing_config_file_exits_2(self, runner, tmp_path):
        result = runner.invoke(cli.main, ["scenarios", "--config",
                                          str(tmp_path / "nope.yaml")])
        assert result.exit_code == 2

    def test_invariant_violation_exits_3(self, runner, fast_config_path,
                                         tmp_path, monkeypatch):
        def explode(*args, **kwargs):
            raise InvariantViolation("power balance residual too large")

        monkeypatch.setattr(cli, "simulate", explode)
        result = runner.invoke(
            cli.main, ["evaluate", "--config", fast_config_path,
                       "--out", str(tmp_path / "o"), "1", "0", "1", "1"])
        assert result.exit_code == 3
        assert "invariant violation" in result.output

    def test_subsample_larger_than_set_exits_2(self, runner, tmp_path):
        doc = dict(FAST_CONFIG)
        cfg = tmp_path / "c.yaml"
        cfg.write_text(yaml.safe_dump(doc))
        # k=2 gives an 8-scenario product; asking for 10 cannot be served
        result = runner.invoke(
            cli.main, ["optimize", "--config", str(cfg),
                       "--scenarios", "10", "--out", str(tmp_path / "o")])
        assert result.exit_code == 2
