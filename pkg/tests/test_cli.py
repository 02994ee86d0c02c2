import json

import pytest

from src import analysis
from src.analysis import ANALYTIC_METRICS
from src.commands import EXIT_DIVERGENT, EXIT_INTERNAL, EXIT_INVALID, EXIT_OK
from src.main import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestValidate:
    def test_bundled_baseline(self, capsys, baseline_path):
        code, out, _ = run_cli(capsys, "validate", str(baseline_path))
        assert code == EXIT_OK
        assert out.startswith(f"OK {baseline_path} digest ")

    def test_invalid_label_reports_violation(self, capsys, document, write_scenario):
        document["topology"]["forwarding"][0]["out_label"] = 500
        code, _, err = run_cli(capsys, "validate", str(write_scenario(document)))
        assert code == EXIT_INVALID
        assert "label 500 outside label space of size 100" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "validate", str(tmp_path / "absent.json"))
        assert code == EXIT_INVALID
        assert err

    def test_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["simulate"])
        assert exc.value.code == EXIT_INVALID

    def test_bad_seed_is_usage_error(self, capsys, baseline_path):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", str(baseline_path), "--seed", str(2**64)])
        assert exc.value.code == EXIT_INVALID


class TestAnalyze:
    def test_json_lists_every_model(self, capsys, baseline_path):
        code, out, _ = run_cli(capsys, "analyze", str(baseline_path), "--format", "json")
        payload = json.loads(out)
        assert code == EXIT_OK
        assert [m["id"] for m in payload["metrics"]] == list(ANALYTIC_METRICS)
        assert all(m["verdict"] == "ANALYTIC_ONLY" for m in payload["metrics"])
        by_id = {m["id"]: m for m in payload["metrics"]}
        assert by_id["redundant_reliability"]["analytic"] == pytest.approx(0.99)
        assert "simulation" not in payload
        assert payload["format"] == "json"

    def test_overloaded_queue(self, capsys, scenario_dir):
        code, out, _ = run_cli(capsys, "analyze", str(scenario_dir / "dos_mm1.json"), "--format", "json")
        by_id = {m["id"]: m for m in json.loads(out)["metrics"]}
        assert code == EXIT_OK
        assert by_id["traffic_intensity"]["analytic"] == pytest.approx(2.0)
        assert by_id["mm1_overload_loss"]["analytic"] == pytest.approx(0.5)
        assert by_id["redundant_reliability"]["analytic"] is None
        assert by_id["redundant_reliability"]["note"]

    def test_text_format(self, capsys, baseline_path):
        code, out, _ = run_cli(capsys, "analyze", str(baseline_path))
        assert code == EXIT_OK
        lines = out.splitlines()
        for metric in ANALYTIC_METRICS:
            assert sum(line.startswith(metric + " ") for line in lines) == 1


class TestSimulate:
    def test_spoof_only_is_consistent(self, capsys, scenario_dir):
        code, out, _ = run_cli(capsys, "simulate", str(scenario_dir / "spoof_only.json"), "--format", "json")
        payload = json.loads(out)
        by_id = {m["id"]: m for m in payload["metrics"]}
        assert code == EXIT_OK
        assert by_id["spoof_acceptance"]["verdict"] == "CONSISTENT"
        assert payload["simulation"]["seed"] == 2024
        assert payload["counters"]["spoofed_injected"] > 0

    def test_divergence_sets_exit_code(self, capsys, scenario_dir, monkeypatch):
        monkeypatch.setattr(analysis, "spoof_acceptance_probability", lambda *args, **kwargs: 0.9)
        code, out, _ = run_cli(capsys, "simulate", str(scenario_dir / "spoof_only.json"), "--format", "json")
        by_id = {m["id"]: m for m in json.loads(out)["metrics"]}
        assert code == EXIT_DIVERGENT
        assert by_id["spoof_acceptance"]["verdict"] == "DIVERGENT"

    def test_same_seed_same_bytes(self, capsys, baseline_path):
        argv = ("simulate", str(baseline_path), "--seed", "42", "--trials", "4", "--horizon", "40", "--format", "json")
        _, first, _ = run_cli(capsys, *argv)
        _, second, _ = run_cli(capsys, *argv)
        _, parallel, _ = run_cli(capsys, *argv, "--workers", "2")
        assert first == second == parallel
        assert json.loads(first)["simulation"] == {"seed": 42, "trials": 4, "horizon": 40.0, "warmup": 0.0}

    def test_overrides_are_validated(self, capsys, document, write_scenario):
        document["simulation"]["warmup"] = 50.0
        code, _, err = run_cli(capsys, "simulate", str(write_scenario(document)), "--horizon", "10")
        assert code == EXIT_INVALID
        assert "horizon" in err


class TestHistory:
    def test_records_and_lists_runs(self, capsys, baseline_path, tmp_path):
        db = tmp_path / "runs.db"
        run_cli(capsys, "analyze", str(baseline_path), "--format", "json", "--history", str(db))
        run_cli(
            capsys, "simulate", str(baseline_path), "--seed", "3", "--trials", "1",
            "--horizon", "20", "--format", "json", "--history", str(db),
        )
        code, out, _ = run_cli(capsys, "history", str(db))
        listing = json.loads(out)
        assert code == EXIT_OK
        assert [run["command"] for run in listing["runs"]] == ["simulate", "analyze"]
        assert listing["runs"][0]["seed"] == "3"
        assert listing["statistics"]["total_runs"] == 2
        assert listing["statistics"]["scenarios"] == 1

    def test_unwritable_ledger_is_internal_failure(self, capsys, baseline_path, tmp_path):
        code, out, _ = run_cli(capsys, "analyze", str(baseline_path), "--format", "json", "--history", str(tmp_path))
        assert code == EXIT_INTERNAL
        assert json.loads(out)["command"] == "analyze"

    def test_corrupt_ledger_is_internal_failure(self, capsys, tmp_path):
        garbage = tmp_path / "garbage.db"
        garbage.write_bytes(b"not a sqlite database " * 64)
        code, out, _ = run_cli(capsys, "history", str(garbage))
        assert code == EXIT_INTERNAL
        assert out == ""
