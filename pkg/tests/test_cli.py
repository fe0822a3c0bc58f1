"""Tests for the command-line front end."""

import json
import subprocess
import sys

import pytest

from stia.cli import RunConfig, main


def run_cli(args):
    return main(args)


def test_trials_zero_is_usage_error(capsys):
    rc = run_cli(["simulate", "--scheme", "tdma", "--trials", "0"])
    assert rc == 2
    assert "trials" in capsys.readouterr().err


def test_stia_needs_matching_delay(capsys):
    rc = run_cli([
        "simulate", "--scheme", "stia", "--k", "3", "--tc", "4", "--tfb", "1",
        "--trials", "10",
    ])
    assert rc == 2


def test_simulate_json_deterministic(tmp_path):
    out1 = tmp_path / "a.json"
    out2 = tmp_path / "b.json"
    flags = [
        "simulate", "--scheme", "tdma", "--k", "3", "--tc", "3", "--tfb", "1",
        "--snr", "40,50,60", "--trials", "400", "--seed", "7",
    ]
    assert run_cli(flags + ["--out", str(out1)]) == 0
    assert run_cli(flags + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    payload = json.loads(out1.read_text())
    assert payload["schema_version"] == 1
    assert 0.9 <= payload["slope"] <= 1.1
    assert len(payload["mean_sum_rates"]) == 3


def test_simulate_thread_count_does_not_change_bytes(tmp_path, monkeypatch):
    flags = [
        "simulate", "--scheme", "zf_tdma", "--k", "3", "--tc", "3", "--tfb", "1",
        "--snr", "40,50,60", "--trials", "1200", "--seed", "3", "--out",
    ]
    out1 = tmp_path / "serial.json"
    monkeypatch.delenv("STIA_THREADS", raising=False)
    assert run_cli(flags + [str(out1)]) == 0
    out2 = tmp_path / "threaded.json"
    monkeypatch.setenv("STIA_THREADS", "4")
    assert run_cli(flags + [str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_simulate_csv_format(tmp_path):
    out = tmp_path / "rates.csv"
    rc = run_cli([
        "simulate", "--scheme", "tdma", "--trials", "200", "--seed", "1",
        "--format", "csv", "--out", str(out),
    ])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "schema_version,scheme,gamma_num,gamma_den,snr_db,mean_sum_rate_bits"
    assert len(lines) == 4  # header + one row per default grid point


def test_simulate_prints_slope(capsys):
    rc = run_cli(["simulate", "--scheme", "tdma", "--trials", "200", "--seed", "2"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "slope=" in out and "ci_halfwidth=" in out


def test_tradeoff_default_grid_rows(tmp_path):
    out = tmp_path / "tradeoff.csv"
    assert run_cli(["tradeoff", "--format", "csv", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "schema_version,scheme,gamma_num,gamma_den,dof_num,dof_den"
    body = {tuple(r.split(",")) for r in rows[1:]}
    assert ("1", "stia", "1", "3", "2", "1") in body
    assert ("1", "zf_mat", "1", "3", "11", "6") in body
    assert ("1", "stia", "3", "2", "3", "2") in body


def test_tradeoff_custom_gammas_json(tmp_path):
    out = tmp_path / "t.json"
    assert run_cli(["tradeoff", "--gammas", "0,1/3,1", "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    stia = {
        (p["gamma_num"], p["gamma_den"]): (p["dof_num"], p["dof_den"])
        for p in payload["points"]
        if p["scheme"] == "stia"
    }
    assert stia[(1, 3)] == (2, 1)


def test_schedule_golden_output(tmp_path):
    out = tmp_path / "plan.json"
    assert run_cli(["schedule", "--k", "3", "--n", "3", "--out", str(out)]) == 0
    plan = json.loads(out.read_text())
    assert plan["stia_rounds"] == [[1, 6, 8], [4, 9, 11], [7, 12, 14]]
    assert plan["zf_slots"] == [2, 3, 5, 15]
    assert plan["tdma_slots"] == [10, 13]
    assert plan["dof"] == [28, 15]


def test_schedule_rejects_bad_n(capsys):
    assert run_cli(["schedule", "--k", "3", "--n", "0"]) == 2


def test_verify_small_run_passes(tmp_path):
    out = tmp_path / "report.json"
    rc = run_cli([
        "verify", "--k-values", "3", "--rounds", "150", "--seed", "4", "--out", str(out),
    ])
    assert rc == 0
    report = json.loads(out.read_text())
    assert report["passed"]


def test_verify_fault_injection_fails(tmp_path):
    out = tmp_path / "report.json"
    rc = run_cli([
        "verify", "--k-values", "3", "--rounds", "100", "--seed", "4",
        "--inject-fault", "alignment", "--out", str(out),
    ])
    assert rc == 1
    assert not json.loads(out.read_text())["passed"]


def test_config_round_trip():
    cfg = RunConfig(command="simulate", k=4, t_c=4, t_fb=1, trials=123, seed=9,
                    scheme="stia", format="csv")
    again = RunConfig.from_json(cfg.to_json())
    assert again == cfg


def test_config_rejects_unknown_keys():
    with pytest.raises(ValueError):
        RunConfig.from_json('{"command": "simulate", "bogus": 1}')


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(RunConfig(command="simulate", scheme="tdma", trials=100, seed=5).to_json())
    rc = run_cli(["simulate", "--config", str(cfg_path), "--trials", "120"])
    assert rc == 0
    assert "slope=" in capsys.readouterr().out


def test_console_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "stia.cli", "schedule", "--k", "3", "--n", "1"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert '"horizon": 9' in proc.stdout
