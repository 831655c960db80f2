import csv
import hashlib
import json
from pathlib import Path

import pytest

from mucb.cli import main
from mucb.config import ConfigError, parse_config

MINIMAL = {
    "environment": {"segments": [{"length": 100, "means": [0.7, 0.4]}]},
    "policies": [{"name": "ucb1"}],
    "reps": 2,
}

TWO_SEGMENTS = """{
  "environment": {
    "segments": [
      {"length": 60, "means": [0.9, 0.1]},
      {"length": 60, "means": [0.1, 0.9]}
    ]
  },
  "tuning": {"delta": 0.8, "M": 2, "T": 120, "w": 10},
  "policies": [
    {"name": "m_ucb", "params": "auto"},
    {"name": "d_ucb", "params": "auto"},
    {"name": "exp3", "params": {"gamma": 0.2}, "label": "exp3_fixed"}
  ],
  "reps": 3,
  "seed": 9
}
"""


def write_config(tmp_path, obj, name="config.json"):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj, indent=2))
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def digest(directory):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(Path(directory).iterdir())}


def test_minimal_stationary_run(tmp_path):
    cfg = write_config(tmp_path, MINIMAL)
    assert main(["run", str(cfg), "--out", str(tmp_path / "out")]) == 0
    regret = read_rows(tmp_path / "out" / "regret_ucb1.csv")
    restarts = read_rows(tmp_path / "out" / "restarts_ucb1.csv")
    assert regret[0] == ["t", "mean_regret", "stderr"]
    assert restarts[0] == ["t", "restarts"]
    assert len(regret) == len(restarts) == 101
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["policies"]["ucb1"]["final_mean_regret"] == float(regret[-1][1])
    assert (tmp_path / "out" / "plot_regret.py").exists()


def test_rerun_is_byte_identical(tmp_path):
    cfg = write_config(tmp_path, TWO_SEGMENTS)
    assert main(["run", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["run", str(cfg), "--out", str(tmp_path / "b"), "--parallelism", "3"]) == 0
    assert digest(tmp_path / "a") == digest(tmp_path / "b")
    assert main(["run", str(cfg), "--out", str(tmp_path / "c"), "--seed", "10"]) == 0
    assert digest(tmp_path / "a")["regret_m_ucb.csv"] != digest(tmp_path / "c")["regret_m_ucb.csv"]


def test_run_prints_feasibility_report(tmp_path, capsys):
    cfg = write_config(tmp_path, TWO_SEGMENTS)
    main(["run", str(cfg), "--out", str(tmp_path / "o")])
    out = capsys.readouterr().out
    assert "Feasibility report" in out and "(b) change amplitude" in out
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert set(summary["policies"]) == {"m_ucb", "d_ucb", "exp3_fixed"}
    assert summary["policies"]["m_ucb"]["tuning"]["w"] == 10


def test_unknown_policy_is_config_error(tmp_path, capsys):
    bad = TWO_SEGMENTS.replace('"d_ucb"', '"dd_ucb"')
    cfg = write_config(tmp_path, bad)
    assert main(["run", str(cfg)]) == 1
    err = capsys.readouterr().err
    assert ":11:" in err and "valid policies: m_ucb" in err


@pytest.mark.parametrize("mutate, line, fragment", [
    (lambda s: s.replace('"reps": 3', '"reps": -1'), 14, "config.reps"),
    (lambda s: s.replace('"w": 10', '"w": 10, "eta": 1'), 8, "tuning.eta"),
    (lambda s: s.replace('"delta": 0.8, ', ''), 8, "tuning.delta"),
    (lambda s: s.replace('"length": 60, "means": [0.1, 0.9]', '"length": 60, "means": [0.1]'), 5,
     "segments[1].means"),
    (lambda s: s.replace('"seed": 9', '"seed": 9,'), 16, "invalid JSON"),
    (lambda s: s.replace('{"gamma": 0.2}', '{"gama": 0.2}'), 12, "params"),
])
def test_config_diagnostics_name_line_and_key(mutate, line, fragment):
    with pytest.raises(ConfigError) as exc:
        parse_config(mutate(TWO_SEGMENTS))
    assert exc.value.line == line
    assert fragment in str(exc.value)


def test_config_csv_environment(tmp_path):
    (tmp_path / "segs.csv").write_text("segment_index,length,mu_1,mu_2\n1,40,0.8,0.2\n2,40,0.2,0.8\n")
    cfg = parse_config(json.dumps({"environment": {"csv": "segs.csv"}, "policies": [{"name": "ucb1"}]}),
                       base=tmp_path)
    assert cfg.env.T == 80 and cfg.env.change_points == (40,)
    with pytest.raises(ConfigError, match="file not found"):
        parse_config(json.dumps({"environment": {"csv": "missing.csv"}, "policies": [{"name": "ucb1"}]}),
                     base=tmp_path)


def test_auto_needs_tuning_inputs():
    obj = dict(MINIMAL, policies=[{"name": "m_ucb", "params": "auto"}])
    with pytest.raises(ConfigError, match="tuning block"):
        parse_config(json.dumps(obj))


def test_duplicate_labels_are_suffixed():
    obj = dict(MINIMAL, policies=[{"name": "ucb1"}, {"name": "ucb1"}])
    cfg = parse_config(json.dumps(obj))
    assert [s.label for s in cfg.policies] == ["ucb1", "ucb1_2"]


def test_tune_text_and_json(capsys, tmp_path):
    assert main(["tune", "--K", "10", "--T", "100000", "--M", "5", "--delta", "0.6", "--w", "800"]) == 0
    out = capsys.readouterr().out
    assert "w     = 800" in out and "gamma_empirical" in out
    path = tmp_path / "tune.json"
    assert main(["tune", "--K", "2", "--T", "120", "--M", "2", "--delta", "0.8", "--w", "10",
                 "--json", "--out", str(path)]) == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed == json.loads(path.read_text())


def test_tune_json_round_trips_through_config(tmp_path):
    path = tmp_path / "tune.json"
    main(["tune", "--K", "2", "--T", "120", "--M", "2", "--delta", "0.8", "--w", "10", "--out", str(path)])
    auto = parse_config(TWO_SEGMENTS)
    from_file = parse_config(TWO_SEGMENTS.replace('"params": "auto"}', '"params": {"from": "tune.json"}}', 1),
                             base=tmp_path)
    assert auto.policies[0].params == from_file.policies[0].params
    assert auto.tuned["m_ucb"] == from_file.tuned["m_ucb"]


def test_tune_stationary_is_input_error(capsys):
    assert main(["tune", "--K", "3", "--T", "1000", "--M", "1", "--delta", "0.5"]) == 1
    assert "M = 1" in capsys.readouterr().err


def test_scaling_small_grid_writes_points_then_fails(tmp_path):
    out = tmp_path / "s"
    code = main(["scaling", "--axis", "M", "--grid", "2,3", "--instances", "1", "--runs", "1", "--out", str(out)])
    assert code == 1
    rows = read_rows(out / "scaling_M.csv")
    assert rows[0] == ["x", "y", "stderr", "runs"] and len(rows) == 3
    assert not (out / "fit.json").exists()


def test_scaling_writes_fit(tmp_path):
    out = tmp_path / "s"
    assert main(["scaling", "--axis", "M", "--grid", "2..8", "--instances", "2", "--runs", "1",
                 "--out", str(out)]) == 0
    assert len(read_rows(out / "scaling_M.csv")) == 8
    fit = json.loads((out / "fit.json").read_text())
    assert set(fit) == {"axis", "a", "b", "c", "sse"}
    assert (out / "plot_scaling_M.py").exists()


def test_plot_scripts_run_on_emitted_files(tmp_path):
    pytest.importorskip("matplotlib")
    import runpy
    cfg = write_config(tmp_path, TWO_SEGMENTS)
    main(["run", str(cfg), "--out", str(tmp_path / "r")])
    runpy.run_path(str(tmp_path / "r" / "plot_regret.py"))
    assert (tmp_path / "r" / "regret.png").exists()
    main(["scaling", "--axis", "K", "--grid", "2,4,6", "--instances", "1", "--runs", "1",
          "--out", str(tmp_path / "s")])
    runpy.run_path(str(tmp_path / "s" / "plot_scaling_K.py"))
    assert (tmp_path / "s" / "scaling_K.png").exists()


def test_lemmas_writes_both_tables(tmp_path):
    assert main(["lemmas", "--reps", "30", "--out", str(tmp_path)]) == 0
    fa = read_rows(tmp_path / "false_alarms.csv")
    det = read_rows(tmp_path / "detection.csv")
    assert [r[0] for r in fa[1:]] == ["false_alarm"]
    assert [r[0] for r in det[1:]] == ["large_change", "near_threshold"]
    assert "delay_bound" in det[0] and "bound" in fa[0]


def test_bad_arguments_exit_one(capsys):
    assert main(["run"]) == 1
    assert main(["scaling", "--axis", "Q"]) == 1
    assert main(["lemmas", "--reps", "0"]) == 1
    assert main(["run", "/nonexistent/config.json"]) == 1


def test_runtime_failure_exit_two(tmp_path, monkeypatch):
    import mucb.cli as cli

    def boom(*a, **k):
        raise RuntimeError("worker crashed")

    monkeypatch.setattr(cli, "monte_carlo", boom)
    cfg = write_config(tmp_path, MINIMAL)
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 2
