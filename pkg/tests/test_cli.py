import numpy as np
import pytest

from steinpairs import report as rpt
from steinpairs.cli import ExperimentConfig, main, run_experiment
from steinpairs.errors import ConfigError


class TestReportRendering:
    def test_empty_report_header_only(self):
        rep = rpt.Report("empty", meta={"seed": 1})
        text = rpt.render(rep, "delimited_values")
        lines = [l for l in text.splitlines() if l and not l.startswith("#")]
        assert lines == [",".join(rpt.COLUMNS)]

    def test_delimited_round_trip(self):
        rep = rpt.Report("t", rows=[
            rpt.check_row("a", 1.25, 1.25, 1e-9, "plumbing"),
            rpt.info_row("b", 3.0e-7),
            rpt.check_row("c", 2.0, 0.0, 1e-3, "plumbing", std_error=0.5),
        ])
        text = rpt.render(rep, "delimited_values")
        rows = rpt.parse_delimited(text)
        assert [r["check"] for r in rows] == ["a", "b", "c"]
        assert rows[0]["verdict"] == "pass"
        assert rows[1]["verdict"] == "info"
        assert rows[2]["verdict"] == "fail"
        # re-render from parsed values gives identical cells
        again = rpt.render(rep, "delimited_values")
        assert again == text

    def test_small_magnitudes_scientific(self):
        assert "e-0" in rpt.format_number(3.2e-7)
        assert rpt.format_number(0.0) == "0"
        assert rpt.format_number(None) == ""

    def test_structured_records_parse_as_json(self):
        import json

        rep = rpt.Report("t", rows=[rpt.info_row("x", 1.0)])
        lines = rpt.render(rep, "structured_records").splitlines()
        for line in lines:
            json.loads(line)

    def test_unknown_format_rejected(self):
        with pytest.raises(ValueError):
            rpt.render(rpt.Report("t"), "yaml")


class TestExperimentConfig:
    def test_round_trip(self):
        cfg = ExperimentConfig("runs", {"n_seq": 10, "d": 2, "p": 0.5, "seed": 3,
                                        "samples": 500, "suites": "identities"})
        again = ExperimentConfig.from_text(cfg.to_text())
        assert again == cfg

    def test_bad_probability_names_field(self):
        with pytest.raises(ConfigError) as err:
            ExperimentConfig.from_text("model = runs\np = 1.5\n")
        assert err.value.field == "p"

    def test_unknown_key_reports_line(self):
        with pytest.raises(ConfigError) as err:
            ExperimentConfig.from_text("model = runs\nbogus = 1\n")
        assert err.value.line == 2

    def test_unknown_model(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_text("model = frobnicate\n")

    def test_unknown_suite(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_text("model = runs\nsuites = nonsense\n")


class TestRunExperiment:
    def test_runs_suite_deterministic(self):
        cfg = ExperimentConfig("runs", {"n_seq": 10, "d": 2, "p": 0.5, "seed": 1,
                                        "samples": 2000,
                                        "suites": "linearity,identities,bounds"})
        a = rpt.render(run_experiment(cfg), "delimited_values")
        b = rpt.render(run_experiment(cfg), "delimited_values")
        assert a == b

    def test_runs_suite_passes(self):
        cfg = ExperimentConfig("runs", {"n_seq": 10, "d": 2, "p": 0.5, "seed": 1,
                                        "samples": 4000,
                                        "suites": "linearity,identities,bounds"})
        rep = run_experiment(cfg)
        assert rep.rows and rep.passed

    def test_iid_suite_includes_bound_and_distance_rows(self):
        cfg = ExperimentConfig("iidsum", {"d": 2, "n": 100, "seed": 2,
                                          "samples": 4000})
        rep = run_experiment(cfg)
        names = [r.check for r in rep.rows]
        assert "bound-vs-displayed-arithmetic" in names
        assert any(n.startswith("iid-distance-") for n in names)
        assert rep.passed

    def test_mww_suite(self):
        rep = run_experiment(ExperimentConfig("mww", {"nx": 3, "ny": 3, "seed": 1}))
        assert rep.passed

    def test_perm_suite(self):
        rep = run_experiment(ExperimentConfig("perm", {"n": 6, "seed": 4,
                                                       "samples": 3000}))
        assert rep.passed

    def test_spin_suite(self):
        rep = run_experiment(ExperimentConfig(
            "spinchain", {"d": 4, "n": 50, "seed": 5, "samples": 30000}))
        assert rep.passed

    def test_oracle_suite(self):
        rep = run_experiment(ExperimentConfig(
            "oracle", {"n_seq": 8, "p": 0.4, "seed": 6, "samples": 30000}))
        assert rep.passed

    def test_bound_suite(self):
        rep = run_experiment(ExperimentConfig(
            "bound", {"target": "iidsum", "d": 2, "n": 50, "seed": 7,
                      "samples": 4000}))
        names = [r.check for r in rep.rows]
        assert "nonsmooth-bound-total" in names
        assert rep.passed


class TestMain:
    def test_cli_writes_report_and_exits_zero(self, tmp_path, capsys):
        out = tmp_path / "report.csv"
        code = main(["runs", "--n-seq", "10", "--d", "2", "--p", "0.5",
                     "--seed", "1", "--samples", "2000",
                     "--suites", "identities", "--format", "delimited_values",
                     "--out", str(out)])
        assert code == 0
        rows = rpt.parse_delimited(out.read_text())
        assert rows and all(r["verdict"] in ("pass", "info") for r in rows)

    def test_cli_byte_identical_reports(self, tmp_path):
        args = ["runs", "--n-seq", "10", "--d", "2", "--p", "0.5", "--seed", "1",
                "--samples", "2000", "--suites", "identities",
                "--format", "delimited_values"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_cli_config_error_exit_code(self, capsys):
        code = main(["runs", "--p", "1.5", "--samples", "100"])
        assert code == 2
        assert "p" in capsys.readouterr().err

    def test_cli_config_file_with_override(self, tmp_path):
        cfgfile = tmp_path / "exp.cfg"
        cfgfile.write_text("model = runs\nn_seq = 10\nd = 2\np = 0.5\n"
                           "samples = 2000\nsuites = identities\n")
        out = tmp_path / "r.csv"
        code = main(["runs", "--config", str(cfgfile), "--seed", "9",
                     "--format", "delimited_values", "--out", str(out)])
        assert code == 0
        text = out.read_text()
        assert "seed = 9" in text

    def test_cli_rejects_mismatched_config_model(self, tmp_path, capsys):
        cfgfile = tmp_path / "exp.cfg"
        cfgfile.write_text("model = mww\n")
        assert main(["runs", "--config", str(cfgfile)]) == 2
