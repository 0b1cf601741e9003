import json
import os

import numpy as np
import pytest
import yaml

from hawkes_npole.harness import cli
from hawkes_npole.harness.config import DEFAULTS, ConfigError, load_config
from hawkes_npole.npole import thread_count
from hawkes_npole.process import read_events


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


def test_config_defaults_printed(capsys):
    assert run_cli("config", "--defaults") == 0
    printed = yaml.safe_load(capsys.readouterr().out)
    assert printed == DEFAULTS


def test_presets_and_overrides():
    cfg = load_config(preset="paper")
    assert cfg["T"] == 1e5 and cfg["trials"] == 100
    cfg = load_config(preset="desk", overrides={"seed": 3, "trials": 4})
    assert cfg.seeds == [3, 4, 5, 6]


def test_invalid_config_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("bogus_key: 1\n")
    assert run_cli("simulate", "--config", bad) == 2
    assert "unknown config keys" in capsys.readouterr().err
    bad.write_text("hyper:\n  step: nonsense\n")
    assert run_cli("fit", "--config", bad) == 2
    with pytest.raises(ConfigError):
        load_config(overrides={"kind": "fit", "events": str(tmp_path / "missing.csv")}).validate()


def test_ingest(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("time,dim\n")
    assert run_cli("ingest", empty) == 0
    assert "N(T)=0" in capsys.readouterr().out
    three = tmp_path / "three.csv"
    three.write_text("time,dim,mark\n0.25,1,2.5\n0.5,2,-1.0\n1.75,1,0.0\n")
    assert run_cli("ingest", three) == 0
    s = read_events(three)
    assert s.times.tolist() == [0.25, 0.5, 1.75] and s.dims.tolist() == [0, 1, 0] and s.marks.tolist() == [2.5, -1.0, 0.0]
    unsorted = tmp_path / "unsorted.csv"
    unsorted.write_text("time,dim\n1.0,1\n0.5,1\n")
    assert run_cli("ingest", unsorted) == 2
    assert "line 3" in capsys.readouterr().err
    assert run_cli("ingest", unsorted, "--sort") == 0
    broken = tmp_path / "broken.csv"
    broken.write_text("time,dim\n0.1,1\nx,1\n0.3\n")
    assert run_cli("ingest", broken) == 2
    assert "lines 3, 4" in capsys.readouterr().err


def test_simulate_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli("simulate", "--seed", 7, "--T", 2000, "--output", a) == 0
    assert run_cli("simulate", "--seed", 7, "--T", 2000, "--output", b, "--threads", 2) == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    assert (a / "events.csv").read_bytes() == (b / "events.csv").read_bytes()
    man = json.loads((a / "manifest.json").read_text())
    assert {"config_fingerprint", "versions", "wall_seconds"} <= set(man)
    assert "wall_seconds" not in json.loads((a / "report.json").read_text())


def test_fit_then_evaluate(tmp_path):
    sim = tmp_path / "sim"
    assert run_cli("simulate", "--seed", 1, "--T", 300, "--output", sim) == 0
    out = tmp_path / "fit"
    assert run_cli("fit", "--events", sim / "events.csv", "--output", out) == 0
    files = sorted(os.listdir(out / "functions"))
    assert len(files) == 25 and files[0] == "f_1_1.csv"
    rep = json.loads((out / "report.json").read_text())
    assert len(rep["mu_hat"]) == 5 and len(rep["pair_l1"]) == 5
    assert run_cli("evaluate", "--events", out / "functions", "--output", tmp_path / "ev") == 0
    ev = json.loads((tmp_path / "ev" / "report.json").read_text())
    # interpolating the 0.01-step export loses little against the exact estimate
    assert ev["average_l1"] == pytest.approx(rep["average_l1"], abs=0.02)


def test_fit_exponential_baseline(tmp_path):
    sim = tmp_path / "sim"
    assert run_cli("simulate", "--seed", 1, "--T", 300, "--output", sim) == 0
    out = tmp_path / "exp"
    assert run_cli("fit", "--events", sim / "events.csv", "--model", "exp", "--output", out) == 0
    rep = json.loads((out / "report.json").read_text())
    assert np.all(np.asarray(rep["alpha_hat"]) >= 0)
    assert len(os.listdir(out / "functions")) == 25


def test_unsorted_events_exit_2(tmp_path):
    ev = tmp_path / "ev.csv"
    ev.write_text("time,dim\n1.0,1\n0.5,1\n")
    assert run_cli("fit", "--events", ev, "--output", tmp_path / "o") == 2
    assert run_cli("fit", "--events", ev, "--sort", "--model", "exp", "--output", tmp_path / "o") == 0


def test_check_mode_and_runtime_errors(tmp_path, monkeypatch):
    monkeypatch.setitem(cli.RUNNERS, "regret", lambda cfg, out: ({}, [("always fails", False, "")]))
    assert run_cli("regret", "--output", tmp_path / "r") == 0
    assert run_cli("regret", "--check", "--output", tmp_path / "r") == 3

    def boom(cfg, out):
        raise RuntimeError("solver exploded")

    monkeypatch.setitem(cli.RUNNERS, "regret", boom)
    assert run_cli("regret", "--output", tmp_path / "r") == 1


def test_thread_env_override(monkeypatch):
    monkeypatch.delenv("HAWKES_NPOLE_THREADS", raising=False)
    assert thread_count(3) == 3
    monkeypatch.setenv("HAWKES_NPOLE_THREADS", "2")
    assert thread_count(8) == 2
