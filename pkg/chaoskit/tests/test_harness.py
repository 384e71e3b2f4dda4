import json

import pytest

from chaoskit.core.exceptions import ConfigValidationError
from chaoskit.services.run_service import parse_config, read_document, run

LINEAR = {"family": "linear", "params": {"a": 2.0}}


def tiny_poc(**overrides):
    document = {
        "kind": "poc", "model": LINEAR, "N": [2, 4, 8], "T": 0.2, "dt": 0.1, "output_every": 1,
        "M": 16, "N_ref": 16, "seed": 12, "bootstrap_resamples": 10,
    }
    document.update(overrides)
    return document


class TestConfigValidation:
    """Experiment documents"""

    def test_defaults(self):
        cfg = parse_config({"kind": "lln"})
        assert cfg.T == 5.0
        assert cfg.dt == 1e-2
        assert cfg.M == 512
        assert cfg.N == [8, 16, 32, 64, 128, 256]

    def test_unknown_kind(self):
        with pytest.raises(ConfigValidationError) as excinfo:
            parse_config({"kind": "sinkhorn"})
        assert "kind" in str(excinfo.value)

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigValidationError):
            parse_config({"kind": "lln", "replicas": 3})

    def test_marginal_larger_than_smallest_system(self):
        with pytest.raises(ConfigValidationError):
            parse_config({"kind": "poc", "N": [2, 8], "k": 3})

    def test_poc_eta_needs_eta_below_one(self):
        with pytest.raises(ConfigValidationError):
            parse_config({"kind": "poc-eta", "eta": 1.0})
        assert parse_config({"kind": "poc-eta", "eta": 0.5}).eta == 0.5

    def test_horizon_must_be_step_multiple(self):
        with pytest.raises(ConfigValidationError):
            parse_config({"kind": "moments", "T": 1.0, "dt": 0.3})

    def test_overrides_win(self):
        cfg = parse_config({"kind": "lln", "seed": 1}, {"seed": 9, "out": None})
        assert cfg.seed == 9

    def test_sizes_are_sorted_and_unique(self):
        assert parse_config({"kind": "poc", "N": [16, 4, 16, 8]}).N == [4, 8, 16]

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"kind": "lln",', encoding="utf-8")
        with pytest.raises(ConfigValidationError) as excinfo:
            read_document(path)
        assert "malformed JSON" in str(excinfo.value)

    def test_top_level_must_be_object(self, write_config):
        with pytest.raises(ConfigValidationError):
            read_document(write_config([1, 2, 3]))


class TestRun:
    """End-to-end runs through the config file"""

    def test_constants_run_writes_artifacts(self, write_config, tmp_path):
        path = write_config({"kind": "constants", "model": LINEAR})
        out = tmp_path / "constants"
        record = run(path, out=out)
        assert record.passed
        assert (out / "report.json").exists()
        assert (out / "run_record.json").exists()
        report = json.loads((out / "report.json").read_text(encoding="utf-8"))
        assert report["delta"] == pytest.approx(1.0, rel=1e-6)
        assert report["passed"] is True

    def test_model_path_relative_to_config(self, write_config, tmp_path, linear_document):
        write_config(linear_document, name="model.json")
        path = write_config({"kind": "constants", "model": "model.json"})
        record = run(path, out=tmp_path / "relative")
        assert record.summary["lambda0"] == pytest.approx(2.0, rel=1e-6)

    def test_model_required(self, write_config, tmp_path):
        path = write_config({"kind": "constants"})
        with pytest.raises(ConfigValidationError):
            run(path, out=tmp_path / "nomodel")

    def test_kind_override(self, write_config, tmp_path):
        path = write_config({"kind": "constants", "gronwall": {"points": 11}})
        record = run(path, out=tmp_path / "gronwall", kind="gronwall")
        assert record.kind == "gronwall"
        assert record.passed
        assert "gronwall.csv" in record.digests

    def test_lln_reruns_are_identical(self, write_config, tmp_path):
        payload = {"kind": "lln", "seed": 5, "lln": {"N_list": [4, 16, 64], "replicas": 200}}
        path = write_config(payload)
        first = run(path, out=tmp_path / "a", threads=1)
        second = run(path, out=tmp_path / "b", threads=4)
        assert first.digests == second.digests
        assert set(first.digests) == {"lln.csv", "report.json"}

    def test_poc_identical_across_thread_counts(self, write_config, tmp_path):
        path = write_config(tiny_poc())
        first = run(path, out=tmp_path / "one", threads=1)
        second = run(path, out=tmp_path / "four", threads=4)
        assert first.digests == second.digests
        assert {"distances.csv", "baseline.csv", "report.json"} <= set(first.digests)

    def test_seed_changes_results(self, write_config, tmp_path):
        path = write_config(tiny_poc())
        first = run(path, out=tmp_path / "s12")
        second = run(path, out=tmp_path / "s13", seed=13)
        assert first.digests["distances.csv"] != second.digests["distances.csv"]

    def test_reference_bias_in_error_budget(self, write_config, tmp_path):
        out = tmp_path / "budget"
        run(write_config(tiny_poc()), out=out)
        budget = json.loads((out / "report.json").read_text(encoding="utf-8"))["error_budget"]
        assert budget["N_ref"] == 16
        assert budget["N_coarse"] == 4
        assert budget["reference_bias"] >= 0.0
        assert budget["scaled"] == pytest.approx(4.0 * budget["reference_bias"])
        assert "baseline_plateau" in budget

    def test_marginal_consistency_reported_for_pairs(self, write_config, tmp_path):
        out = tmp_path / "pairs"
        run(write_config(tiny_poc(k=2)), out=out)
        report = json.loads((out / "report.json").read_text(encoding="utf-8"))
        assert set(report["marginal_consistency"]) == {"2", "4", "8"}
        for check in report["marginal_consistency"].values():
            assert check["slack"] >= 0.0

    def test_identical_duhamel_pair_passes(self, write_config, tmp_path):
        payload = {
            "kind": "duhamel", "T": 1.0, "dt": 0.1,
            "duhamel": {"kind": "identical", "budget": 64, "outer": 8, "inner": 8, "quad_nodes": 2},
        }
        record = run(write_config(payload), out=tmp_path / "duhamel")
        assert record.passed
        assert record.summary["max_residual"] == 0.0

    def test_moments_stay_bounded(self, write_config, tmp_path):
        payload = {"kind": "moments", "model": LINEAR, "N": [4], "T": 1.0, "dt": 0.1, "M": 32}
        record = run(write_config(payload), out=tmp_path / "moments")
        assert record.passed
        assert record.summary["max_overall"] <= record.summary["max_first_half"] * 1.5


@pytest.mark.slow
class TestAcceptance:
    """Larger runs with PASS criteria"""

    def test_lln_slope(self, write_config, tmp_path):
        record = run(write_config({"kind": "lln", "seed": 2}), out=tmp_path / "lln")
        assert record.passed

    def test_classical_gronwall(self, write_config, tmp_path):
        record = run(write_config({"kind": "gronwall", "gronwall": {"C": 2.0, "T": 2.0}}), out=tmp_path / "g")
        assert record.passed
        assert record.summary["classical_relative_error"] <= 1e-8

    def test_pair_marginal_within_twice_single_marginal(self, write_config, tmp_path):
        payload = {
            "kind": "poc", "model": {"family": "linear", "params": {"a": 2.0, "kappa": 0.1}}, "k": 2,
            "N": [4, 8, 16], "T": 1.0, "dt": 0.1, "output_every": 5, "M": 256, "N_ref": 128,
            "seed": 21, "bootstrap_resamples": 40,
        }
        out = tmp_path / "pairs"
        run(write_config(payload), out=out)
        report = json.loads((out / "report.json").read_text(encoding="utf-8"))
        assert all(check["ok"] for check in report["marginal_consistency"].values())

    def test_constant_diffusions_match_heat_kernel(self, write_config, tmp_path):
        payload = {"kind": "duhamel", "T": 1.0, "dt": 0.01, "seed": 4, "duhamel": {"budget": 8192}}
        record = run(write_config(payload), out=tmp_path / "heat")
        assert record.summary["max_residual"] <= 4.0 * record.summary["error_bar"] + 5e-3
