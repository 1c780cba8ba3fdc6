import json
import logging

import pytest
import yaml

from pageflip.errors import ConfigError
from pageflip.harness import cli
from pageflip.harness.config import ExperimentConfig, dump_config, from_dict, load_config
from pageflip.harness.plots import emit_plots
from pageflip.harness.runner import (RECORD_KEYS, ExperimentTrace, expand_grid, read_trace, replay,
                                     run, settle_cycle, sweep, validate_trace, write_trace)


@pytest.fixture(scope="module")
def default_trace():
    return run(ExperimentConfig())


def test_unknown_keys_are_rejected():
    with pytest.raises(ConfigError, match="unknown"):
        from_dict({"page": {"stifness": "low"}})
    with pytest.raises(ConfigError, match="unknown"):
        ExperimentConfig().replace({"adaptive.k_factor": 0.4})


@pytest.mark.parametrize("data", [
    {"P0_des": "lots"}, {"P0_des": -5}, {"max_cycles": 1.5}, {"page": {"stiffness": "cardboard"}},
    {"adaptive": {"k": 2.0}}, {"finger": {"start": [0.0]}}, {"output": {"csv": "yes"}}, {"mode": "dance"},
    {"page": 3},
])
def test_bad_values_are_rejected(data):
    with pytest.raises(ConfigError):
        from_dict(data)


def test_yaml_round_trip(tmp_path):
    cfg = ExperimentConfig().replace({"page.stiffness": "high", "rng_seed": 4, "gains.shape_theta.output_limit": "inf"})
    path = tmp_path / "c.yaml"
    path.write_text(dump_config(cfg))
    back = load_config(path)
    assert back == cfg and back.hash == cfg.hash


def test_hash_ignores_output_section():
    a = ExperimentConfig()
    assert a.replace({"output.directory": "elsewhere"}).hash == a.hash
    assert a.replace({"rng_seed": 1}).hash != a.hash


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("page: [unclosed")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_zero_cycles_gives_empty_failed_trace():
    t = run(ExperimentConfig(max_cycles=0))
    assert t.records == [] and t.success is False


def test_default_run_succeeds_in_band(default_trace):
    s = default_trace.summary
    assert s["success"] and s["error"] is None
    assert s["P1_des"] is not None and s["P3_des"] == 0.5 * s["P1_des"]
    assert abs(s["Theta"] - 215.0) <= 3.0 and abs(s["X_c"] - 979.0) <= 15.0
    assert s["stages"][-2:] == ["Up", "ShapeControl"]
    validate_trace(default_trace)
    assert set(default_trace.records[0]) == set(RECORD_KEYS)


def test_same_config_same_bytes(default_trace):
    assert run(ExperimentConfig()).summary_bytes() == default_trace.summary_bytes()


def test_write_read_replay(tmp_path, default_trace):
    d = write_trace(default_trace, tmp_path, csv_export=True)
    assert d.name == default_trace.config_hash[:16]
    back = read_trace(d)
    assert back.summary == default_trace.summary
    assert back.records == json.loads(json.dumps(default_trace.records))
    assert (d / "records.csv").read_text().splitlines()[0].split(",") == list(RECORD_KEYS)
    same, _ = replay(d)
    assert same


def test_failed_write_leaves_other_runs_alone(tmp_path, default_trace, monkeypatch):
    first = write_trace(run(ExperimentConfig(max_cycles=0)), tmp_path)
    before = {p.name: p.read_bytes() for p in first.iterdir()}
    import pageflip.harness.runner as runner

    def boom(records):
        raise RuntimeError("disk full")

    monkeypatch.setattr(runner, "_records_jsonl", boom)
    with pytest.raises(RuntimeError):
        write_trace(default_trace, tmp_path)
    assert {p.name: p.read_bytes() for p in first.iterdir()} == before
    assert sorted(p.name for p in tmp_path.iterdir()) == [first.name]


def test_expand_grid():
    pts = expand_grid({"page.stiffness": ["low", "high"], "rng_seed": [1, 2, 3]})
    assert len(pts) == 6 and pts[0] == {"page.stiffness": "low", "rng_seed": 1}
    assert expand_grid([{"a": 1}]) == [{"a": 1}]
    for bad in ({}, [], {"a": 1}, {"a": []}, "x"):
        with pytest.raises(ConfigError):
            expand_grid(bad)


def test_sweep_isolates_failures_and_matches_run():
    base = ExperimentConfig(max_cycles=300)
    grid = [{"rng_seed": 3}, {"page.stiffness": "bogus"}, {"mode": "press", "press.cycles": 50}]
    out = sweep(base, grid, workers=1)
    assert [t.summary["success"] for t in out] == [False, False, False]
    assert out[1].summary["error"].startswith("ConfigError")
    assert out[0].summary_bytes() == run(base.replace({"rng_seed": 3})).summary_bytes()
    assert out[2].summary["mode"] == "press"


def test_one_point_grid_equals_run(default_trace):
    (only,) = sweep(ExperimentConfig(), {"rng_seed": [0]})
    assert only.summary_bytes() == default_trace.summary_bytes()


def test_settle_cycle():
    assert settle_cycle([False, True, False, True, True]) == 3
    assert settle_cycle([True, True]) == 0
    assert settle_cycle([True, False]) is None
    assert settle_cycle([]) is None


def test_press_mode_summary():
    t = run(ExperimentConfig().replace({"mode": "press", "press.P_des": 2180.0}))
    s = t.summary
    assert s["success"] and s["stages"] == ["Press"]
    assert s["orientation_settle_cycle"] <= 150 and s["force_settle_cycle"] <= 200
    validate_trace(t)


def test_plots(tmp_path, default_trace):
    files = emit_plots(default_trace, tmp_path / "a")
    assert sorted(f.name for f in files) == ["shape.svg", "turning.svg"]
    again = emit_plots(default_trace, tmp_path / "b")
    for f, g in zip(files, again):
        assert f.read_bytes() == g.read_bytes()


def test_empty_trace_plots_nothing(tmp_path, caplog):
    with caplog.at_level(logging.WARNING):
        assert emit_plots(ExperimentTrace({}, ""), tmp_path) == []
    assert "empty trace" in caplog.text
    assert list(tmp_path.iterdir()) == []


def test_mu_crosses_threshold_at_rub_to_up(default_trace):
    mu_eps = default_trace.config["adaptive"]["mu_eps"]
    (up,) = [t for t in default_trace.transitions if t["to"] == "Up"]
    rec = {r["cycle"]: r for r in default_trace.records}
    assert rec[up["cycle"]]["stage"] == "Rub"
    assert rec[up["cycle"]]["mu"] <= mu_eps
    assert rec[up["cycle"] + 1]["stage"] == "Up"
    assert rec[up["cycle"] + 1]["P_des_current"] == up["P3_des"]


def test_cli_run_replay_plot(tmp_path, capsys):
    out = tmp_path / "runs"
    assert cli.main(["run", "--out", str(out), "--no-plots"]) == cli.OK
    (d,) = out.iterdir()
    assert json.loads(capsys.readouterr().out)["success"] is True
    assert cli.main(["replay", str(d)]) == cli.OK
    assert cli.main(["plot", str(d)]) == cli.OK
    assert (d / "turning.svg").exists()


def test_cli_exit_codes(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text(yaml.safe_dump({"page": {"colour": "red"}}))
    assert cli.main(["run", str(bad), "--out", str(tmp_path)]) == cli.BAD_INPUT
    limited = tmp_path / "limited.yaml"
    limited.write_text(yaml.safe_dump({"P0_des": 300.0, "adaptive": {"trial_max": 1}}))
    assert cli.main(["run", str(limited), "--out", str(tmp_path / "r"), "--no-plots"]) == cli.FAILED
    (d,) = (tmp_path / "r").iterdir()
    assert json.loads((d / "summary.json").read_text())["error"].startswith("TrialLimit")
    assert cli.main(["replay", str(tmp_path / "nowhere")]) == cli.BAD_INPUT


def test_cli_sweep(tmp_path):
    grid = tmp_path / "grid.yaml"
    grid.write_text(yaml.safe_dump({"press.P_des": [500.0, 9500.0]}))
    cfg = tmp_path / "press.yaml"
    cfg.write_text(yaml.safe_dump({"mode": "press"}))
    rc = cli.main(["sweep", str(cfg), "--grid", str(grid), "--out", str(tmp_path / "s"), "--workers", "1",
                   "--no-plots"])
    assert rc == cli.OK
    assert len(list((tmp_path / "s").iterdir())) == 2
