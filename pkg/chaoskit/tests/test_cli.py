import csv

import pytest
from typer.testing import CliRunner

from chaoskit.cli import app

runner = CliRunner()

LINEAR = {"family": "linear", "params": {"a": 2.0}}


class TestCommands:
    """Subcommands and exit codes"""

    def test_constants_prints_table(self, write_config, tmp_path):
        path = write_config({"kind": "constants", "model": LINEAR})
        result = runner.invoke(app, ["constants", "--config", str(path), "--out", str(tmp_path / "c")])
        assert result.exit_code == 0, result.output
        assert "lambda0" in result.output
        assert (tmp_path / "c" / "report.json").exists()

    def test_gronwall_subcommand_overrides_kind(self, write_config, tmp_path):
        path = write_config({"kind": "lln", "gronwall": {"points": 21}})
        result = runner.invoke(app, ["gronwall", "--config", str(path), "--out", str(tmp_path / "g")])
        assert result.exit_code == 0, result.output
        assert "PASS" in result.output
        assert (tmp_path / "g" / "gronwall.csv").exists()

    def test_malformed_config_exits_with_usage_code(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        result = runner.invoke(app, ["run", "--config", str(path)])
        assert result.exit_code == 2

    def test_unknown_kind_exits_with_usage_code(self, write_config):
        result = runner.invoke(app, ["run", "--config", str(write_config({"kind": "sinkhorn"}))])
        assert result.exit_code == 2

    def test_missing_model_exits_with_usage_code(self, write_config, tmp_path):
        path = write_config({"kind": "moments"})
        result = runner.invoke(app, ["moments", "--config", str(path), "--out", str(tmp_path / "m")])
        assert result.exit_code == 2

    def test_simulate_writes_moments(self, write_config, tmp_path):
        document = {
            "model": LINEAR,
            "sim": {"dt": 0.1, "T": 0.5, "replicas": 4, "seed": 3},
            "init": {"kind": "iid", "base": {"type": "point", "mean": 1.0}},
            "N": 3,
        }
        out = tmp_path / "sim"
        result = runner.invoke(app, ["simulate", "--config", str(write_config(document)), "--out", str(out)])
        assert result.exit_code == 0, result.output
        with open(out / "moments.csv", encoding="utf-8") as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["t", "mean_norm2", "stderr"]
        assert len(rows) == 1 + 6
        assert float(rows[1][1]) == pytest.approx(1.0)
        assert (out / "run_record.json").exists()

    def test_simulate_trajectory_output(self, write_config, tmp_path):
        document = {
            "model": LINEAR,
            "sim": {"dt": 0.1, "T": 0.2, "replicas": 2},
            "init": {"kind": "iid", "base": {"type": "gaussian"}},
            "N": 2,
            "output": "trajectory",
        }
        out = tmp_path / "traj"
        result = runner.invoke(app, ["simulate", "--config", str(write_config(document)), "--out", str(out)])
        assert result.exit_code == 0, result.output
        with open(out / "trajectory.csv", encoding="utf-8") as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["t", "replica", "particle", "coord_0"]
        assert len(rows) == 1 + 3 * 2 * 2

    def test_simulate_requires_model(self, write_config):
        document = {"sim": {"dt": 0.1, "T": 0.2}, "init": {"kind": "iid", "base": {"type": "point"}}, "N": 2}
        result = runner.invoke(app, ["simulate", "--config", str(write_config(document))])
        assert result.exit_code == 2
