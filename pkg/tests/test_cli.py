import json
import math
from pathlib import Path

import pytest
from click.testing import CliRunner

from symseg.cli import load_config_file, main, parse_snr


@pytest.fixture
def runner():
    return CliRunner()


def test_parse_snr():
    assert math.isinf(parse_snr("inf"))
    assert math.isinf(parse_snr("Infinity"))
    assert parse_snr("9") == 9.0
    with pytest.raises(Exception):
        parse_snr("-1")
    with pytest.raises(Exception):
        parse_snr("lots")


def test_load_config_file(tmp_path):
    p = tmp_path / "cfg"
    p.write_text("kappa = 0.7  # sticky\n\nalphabet-size=5\n")
    assert load_config_file(str(p)) == {"kappa": "0.7", "alphabet_size": "5"}
    bad = tmp_path / "bad"
    bad.write_text("no equals sign\n")
    with pytest.raises(Exception):
        load_config_file(str(bad))


def test_generate_is_deterministic(runner, tmp_path):
    args = ["generate", "--scenario", "duffing2", "--snr", "9", "--seed", "3",
            "--epochs", "6", "--epoch-length", "50"]
    r1 = runner.invoke(main, args + ["--out", str(tmp_path / "a.csv")])
    r2 = runner.invoke(main, args + ["--out", str(tmp_path / "b.csv")])
    assert r1.exit_code == 0, r1.output
    assert r2.exit_code == 0, r2.output
    assert (tmp_path / "a.csv").read_text() == (tmp_path / "b.csv").read_text()
    sidecar = json.loads((tmp_path / "a.json").read_text())
    assert sidecar["scenario"] == "duffing2"
    assert sidecar["snr"] == 9.0
    header = (tmp_path / "a.csv").read_text().splitlines()[0]
    assert header == "t,x,epoch,label"


def test_run_simulated_and_summary(runner, tmp_path):
    out = tmp_path / "summary.json"
    trace = tmp_path / "trace.jsonl"
    r = runner.invoke(main, [
        "run", "--scenario", "duffing2", "--seed", "1", "--epochs", "30",
        "--epoch-length", "300", "--revise", "--out", str(out), "--trace", str(trace),
    ])
    assert r.exit_code == 0, r.output
    summary = json.loads(out.read_text())
    assert summary["scenario"] == "duffing2"
    assert summary["revision"] is True
    assert 0.0 <= summary["epoch_error_pct"] <= 100.0
    lines = [json.loads(line) for line in trace.read_text().splitlines()]
    assert len(lines) == 29
    assert {"epoch", "scores", "gamma", "b", "posterior", "chosen", "new_class"} <= set(lines[0])


def test_run_external_csv_round_trip(runner, tmp_path):
    csv_path = tmp_path / "stream.csv"
    r = runner.invoke(main, [
        "generate", "--scenario", "duffing2", "--seed", "2", "--epochs", "20",
        "--epoch-length", "300", "--out", str(csv_path),
    ])
    assert r.exit_code == 0, r.output
    out = tmp_path / "summary.json"
    r = runner.invoke(main, [
        "run", "--scenario", "external-csv", "--in", str(csv_path), "--out", str(out),
    ])
    assert r.exit_code == 0, r.output
    summary = json.loads(out.read_text())
    # labels round-tripped through the CSV, so the run is scored
    assert "epoch_error_pct" in summary


def test_run_external_csv_requires_in(runner):
    r = runner.invoke(main, ["run", "--scenario", "external-csv"])
    assert r.exit_code != 0
    assert "--in" in r.output


def test_run_rejects_malformed_csv(runner, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,x,epoch,label\n0.0,1.0,0,0\n0.1,oops,0,0\n")
    r = runner.invoke(main, ["run", "--scenario", "external-csv", "--in", str(bad)])
    assert r.exit_code != 0
    assert "malformed row 3" in r.output

    wrong_header = tmp_path / "h.csv"
    wrong_header.write_text("a,b,c\n")
    r = runner.invoke(main, ["run", "--scenario", "external-csv", "--in", str(wrong_header)])
    assert r.exit_code != 0
    assert "header" in r.output

    ragged = tmp_path / "r.csv"
    ragged.write_text("t,x,epoch\n0,1.0,0\n1,1.0,0\n2,1.0,1\n")
    r = runner.invoke(main, ["run", "--scenario", "external-csv", "--in", str(ragged)])
    assert r.exit_code != 0
    assert "equal-length" in r.output


def test_config_file_and_flag_precedence(runner, tmp_path):
    cfg = tmp_path / "cfg"
    cfg.write_text("kappa=0.8\nepsilon=0.5\n")
    r = runner.invoke(main, [
        "run", "--scenario", "duffing2", "--seed", "0", "--epochs", "8",
        "--epoch-length", "200", "--config", str(cfg), "--epsilon", "0.01",
    ])
    assert r.exit_code == 0, r.output
    used = json.loads(r.output[r.output.index("{"):])["config"]
    assert used["kappa"] == 0.8      # file beats default
    assert used["epsilon"] == 0.01   # explicit flag beats file


def test_run_rejects_invalid_config_values(runner, tmp_path):
    cfg = tmp_path / "cfg"
    cfg.write_text("kappa=1.5\n")
    r = runner.invoke(main, [
        "run", "--scenario", "duffing2", "--epochs", "5", "--epoch-length", "100",
        "--config", str(cfg),
    ])
    assert r.exit_code != 0
    assert "kappa" in r.output


def test_report_aggregates(runner, tmp_path):
    for seed, err in ((0, 2.0), (1, 4.0)):
        (tmp_path / f"s{seed}.json").write_text(json.dumps({
            "scenario": "duffing2", "snr": None, "seed": seed, "crp_mode": "adaptive",
            "revision": False, "classes": 2, "wall_time_s": 1.0,
            "epoch_error_pct": err,
        }))
    r = runner.invoke(main, ["report", str(tmp_path / "s0.json"), str(tmp_path / "s1.json")])
    assert r.exit_code == 0, r.output
    lines = r.output.strip().splitlines()
    assert lines[0].startswith("scenario,snr,crp,revision,runs")
    assert lines[1].startswith("duffing2,inf,adaptive,False,2,3.00,1.00")
