import json

import pytest

from scnls import cli
from scnls.acceptance import CheckResult


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=2))
    return path


def tiny_sweep(**overrides):
    doc = {
        "schema_version": 1,
        "grid": {"points_base": 256, "wkb_points": 128},
        "sweep": {"eps_list": [0.25, 0.125], "s_list": [0.0, 1.0]},
    }
    doc.update(overrides)
    return doc


class TestConfigValidation:
    def test_missing_schema_version(self, tmp_path):
        cfg = write_config(tmp_path, {"sweep": {}})
        assert cli.run(["study-ghost", "--config", str(cfg), "--out", str(tmp_path)]) == 2

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"schema_version": 1, "sweeps": {}})
        assert cli.run(["study-ghost", "--config", str(cfg), "--out", str(tmp_path)]) == 2
        assert "sweeps" in capsys.readouterr().err

    def test_negative_dt_names_field(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"schema_version": 1, "run": {"dt": -1e-3, "T": 0.1}})
        assert cli.run(["run-nls", "--config", str(cfg), "--out", str(tmp_path)]) == 2
        assert "dt" in capsys.readouterr().err

    def test_study_name_mismatch(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"schema_version": 1, "study": "ghost_separation"})
        assert cli.run(["study-smalltime", "--config", str(cfg), "--out", str(tmp_path)]) == 2
        assert "ghost_separation" in capsys.readouterr().err

    def test_malformed_json(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert cli.run(["study-ghost", "--config", str(path), "--out", str(tmp_path)]) == 2
        assert "JSON" in capsys.readouterr().err

    def test_bad_a1_mode_named(self, tmp_path, capsys):
        cfg = write_config(tmp_path, tiny_sweep())
        doc = json.loads(cfg.read_text())
        doc["sweep"]["a1_mode"] = "diagonal"
        cfg = write_config(tmp_path, doc)
        assert cli.run(["study-ghost", "--config", str(cfg), "--out", str(tmp_path)]) == 2
        assert "a1_mode" in capsys.readouterr().err

    def test_unknown_subcommand(self):
        assert cli.run(["study-everything"]) == 2

    def test_help_exits_zero(self):
        assert cli.run(["--help"]) == 0


class TestRunCommands:
    def test_run_nls_writes_trajectory(self, tmp_path):
        cfg = write_config(
            tmp_path,
            {"schema_version": 1,
             "run": {"eps": 0.25, "points": 256, "T": 0.05, "norms": [0.0, 1.0]}},
        )
        out = tmp_path / "out"
        assert cli.run(["run-nls", "--config", str(cfg), "--out", str(out)]) == 0
        lines = (out / "nls_trajectory.csv").read_text().splitlines()
        assert lines[0] == "t,mass,energy,h0,h1"
        assert len(lines) > 2
        summary = json.loads((out / "summary.json").read_text())
        assert summary["study"] == "run_nls"

    def test_run_nls_rejects_zero_eps(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"schema_version": 1, "run": {"eps": 0.0}})
        assert cli.run(["run-nls", "--config", str(cfg), "--out", str(tmp_path)]) == 2
        assert "run.eps" in capsys.readouterr().err

    def test_run_wkb_with_corrector_and_dumps(self, tmp_path):
        cfg = write_config(
            tmp_path,
            {"schema_version": 1,
             "run": {"eps": 0.0, "points": 64, "T": 0.05, "with_corrector": True,
                     "a1_mode": "equal_a0", "dump_fields": True}},
        )
        out = tmp_path / "out"
        assert cli.run(["run-wkb", "--config", str(cfg), "--out", str(out)]) == 0
        header = (out / "wkb_trajectory.csv").read_text().splitlines()[0]
        assert "grad_phi_max" in header and "phi1_linf" in header
        assert (out / "fields" / "a_0000.csv").exists()
        assert (out / "fields" / "phi_0000.json").exists()

    def test_run_wkb_guard_abort_exit_code(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            {"schema_version": 1,
             "run": {"eps": 0.0, "points": 64, "T": 0.25, "sing_tol": 1e-6}},
        )
        assert cli.run(["run-wkb", "--config", str(cfg), "--out", str(tmp_path)]) == 3
        assert "guard" in capsys.readouterr().err


class TestStudyCommands:
    def test_ghost_study_outputs(self, tmp_path):
        cfg = write_config(tmp_path, tiny_sweep())
        out = tmp_path / "out"
        assert cli.run(["study-ghost", "--config", str(cfg), "--out", str(out)]) == 0
        assert (out / "ghost_study.csv").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert "ghost_separation" in summary["studies"]

    def test_ghost_study_deterministic(self, tmp_path):
        cfg = write_config(tmp_path, tiny_sweep())
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert cli.run(["study-ghost", "--config", str(cfg), "--out", str(out1)]) == 0
        assert cli.run(["study-ghost", "--config", str(cfg), "--out", str(out2)]) == 0
        assert (out1 / "ghost_study.csv").read_bytes() == (out2 / "ghost_study.csv").read_bytes()
        assert (out1 / "summary.json").read_bytes() == (out2 / "summary.json").read_bytes()

    def test_smalltime_study(self, tmp_path):
        cfg = write_config(tmp_path, tiny_sweep())
        out = tmp_path / "out"
        assert cli.run(["study-smalltime", "--config", str(cfg), "--out", str(out)]) == 0
        assert (out / "smalltime_study.csv").exists()

    def test_ghost_n_study_defaults_to_scaled_mode(self, tmp_path):
        cfg = write_config(tmp_path, tiny_sweep())
        out = tmp_path / "out"
        assert cli.run(["study-ghost-n", "--config", str(cfg), "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        header = summary["studies"]["ghost_higher_order"]["header"]
        assert header["config"]["a1_mode"] == "scaled"

    def test_report_inflation(self, tmp_path):
        doc = tiny_sweep()
        doc["scaling"] = {"n": 6, "s": 1.0, "sigma": 1.5, "k": 1.0}
        cfg = write_config(tmp_path, doc)
        out = tmp_path / "out"
        assert cli.run(["report-inflation", "--config", str(cfg), "--out", str(out)]) == 0
        assert (out / "inflation_report.csv").exists()
        assert (out / "ghost_study.csv").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["studies"]["inflation"]["header"]["limitation"]

    def test_report_corollary_with_target_energy(self, tmp_path):
        doc = tiny_sweep()
        doc["corollary"] = {"n": 6, "delta": 0.5, "target_energy": 1.0}
        cfg = write_config(tmp_path, doc)
        out = tmp_path / "out"
        assert cli.run(["report-corollary", "--config", str(cfg), "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        c0 = summary["studies"]["corollary"]["header"]["leading_energy"]
        assert c0 == pytest.approx(1.0, rel=1e-6)

    def test_out_dir_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUT_DIR_ENV, str(tmp_path / "envout"))
        cfg = write_config(
            tmp_path,
            {"schema_version": 1, "run": {"eps": 0.25, "points": 256, "T": 0.02}},
        )
        assert cli.run(["run-nls", "--config", str(cfg)]) == 0
        assert (tmp_path / "envout" / "nls_trajectory.csv").exists()


class TestSelftest:
    @pytest.fixture
    def stub_suite(self, monkeypatch):
        outcomes = {"passed": True}

        class StubSuite:
            def __init__(self, jobs=1, seed=0):
                self.jobs = jobs
                self.seed = seed

            def run_all(self, printer=None):
                results = [
                    CheckResult(i, f"check-{i}", outcomes["passed"], "stub")
                    for i in range(1, 10)
                ]
                if printer:
                    for r in results:
                        printer(f"[{r.criterion}] {r.name} {'PASS' if r.passed else 'FAIL'}")
                return results

            def reports(self):
                return []

        monkeypatch.setattr(cli, "AcceptanceSuite", StubSuite)
        return outcomes

    def test_selftest_pass_exit_zero(self, tmp_path, stub_suite, capsys):
        assert cli.run(["selftest", "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert out.count("PASS") == 9
        payload = json.loads((tmp_path / "acceptance_summary.json").read_text())
        assert payload["passed"] is True
        assert len(payload["criteria"]) == 9

    def test_selftest_failure_exit_four(self, tmp_path, stub_suite, capsys):
        stub_suite["passed"] = False
        assert cli.run(["selftest", "--out", str(tmp_path)]) == 4
        assert "FAILED" in capsys.readouterr().err
