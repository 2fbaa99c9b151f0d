import filecmp

import pytest

from marsupial import cli
from marsupial.errors import NumericalDivergence
from marsupial.metrics import read_summary

TINY = """\
name: tiny
world: {ground: {height: 0.0}}
tether: {element_length: 0.2}
winch: {exit_offset: [0, 0, 0.3], max_reel_rate: 1.0}
uav: {start: [0.5, 0, 1.0], tether_compensation: 1.0}
ugv: {start: [0, 0, 0]}
timeout: 10
trajectory:
  mode: rtta
  waypoints:
    - {ugv: [0, 0, 0], uav: [0.5, 0, 1.3]}
    - {ugv: [0.2, 0, 0], uav: [0.7, 0, 1.1]}
"""


@pytest.fixture
def tiny(tmp_path):
    p = tmp_path / "tiny.yaml"
    p.write_text(TINY)
    return p


def test_run_writes_artifacts(tiny, tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["run", str(tiny), "--out", str(out)]) == 0
    for name in ("uav.csv", "ugv.csv", "tether.csv", "summary.csv", "path_xy.svg", "tether_length.svg", "min_dist.svg"):
        assert (out / name).is_file()
    s = read_summary(out / "summary.csv")
    assert s.targets == s.targets_total == 2
    assert "2/2 targets" in capsys.readouterr().out


def test_run_env_default_root(tiny, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "root"))
    assert cli.main(["run", "--config", str(tiny), "--no-charts"]) == 0
    assert (tmp_path / "root" / "tiny" / "uav.csv").is_file()
    assert not (tmp_path / "root" / "tiny" / "uav_x.svg").exists()


def test_malformed_config_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("uav: {start: [0, 0, 1]\nugv: {start: [0, 0, 0]}\n")
    assert cli.main(["run", str(bad), "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG
    err = capsys.readouterr().err
    assert "line" in err and "column" in err


def test_schema_error_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("uav: {start: [0, 0, 1]}\nugv: {start: [0, 0, 0]}\ntether: {element_length: 0.3}\n")
    assert cli.main(["run", str(bad)]) == cli.EXIT_CONFIG
    assert "tether" in capsys.readouterr().err


def test_timeout_exit_1_keeps_partial_log(tiny, tmp_path):
    out = tmp_path / "o"
    assert cli.main(["run", str(tiny), "--out", str(out), "--timeout", "0.2", "--no-charts"]) == cli.EXIT_TIMEOUT
    assert read_summary(out / "summary.csv").targets < 2


def test_divergence_exit_3(tiny, tmp_path, monkeypatch):
    def boom(cfg):
        raise NumericalDivergence("state magnitude exceeded 1e6")
    monkeypatch.setattr(cli, "run_scenario", boom)
    assert cli.main(["run", str(tiny), "--out", str(tmp_path / "o")]) == cli.EXIT_DIVERGENCE


def test_bad_flags_exit_2(tiny):
    assert cli.main(["run", str(tiny), "--log-rate", "0"]) == cli.EXIT_CONFIG
    assert cli.main(["run"]) == cli.EXIT_CONFIG


def test_seedless_check(tiny, capsys):
    assert cli.main(["run", str(tiny), "--seedless-check"]) == 0
    assert "byte-identical" in capsys.readouterr().out


def test_parallel_runs(tiny, tmp_path):
    other = tmp_path / "tiny2.yaml"
    other.write_text(TINY.replace("name: tiny", "name: tiny2"))
    out = tmp_path / "many"
    assert cli.main(["run", str(tiny), str(other), "--out", str(out), "--parallel", "2", "--no-charts"]) == 0
    assert filecmp.cmp(out / "tiny" / "uav.csv", out / "tiny2" / "uav.csv", shallow=False)


def test_replay_metrics_matches(tiny, tmp_path, capsys):
    out = tmp_path / "o"
    cli.main(["run", str(tiny), "--out", str(out)])
    capsys.readouterr()
    charts = out / "charts"
    assert cli.main(["replay-metrics", str(out), "--config", str(tiny), "--charts", "--out", str(charts)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("sim_time,targets")
    assert lines[1] == (out / "summary.csv").read_text().splitlines()[1]
    for svg in charts.glob("*.svg"):
        assert svg.read_bytes() == (out / svg.name).read_bytes()


def test_replay_missing_dir(tmp_path):
    assert cli.main(["replay-metrics", str(tmp_path / "none")]) == cli.EXIT_CONFIG


def test_catenary_study_rejects_long_elements(tmp_path, capsys):
    code = cli.main(["catenary-study", "--element-lengths", "0.25", "--out", str(tmp_path)])
    assert code == cli.EXIT_CONFIG
    assert "0.2" in capsys.readouterr().err


def test_catenary_study_small(tmp_path):
    assert cli.main(["catenary-study", "--separations", "5", "--element-lengths", "0.2,0.1",
                     "--duration", "1", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "catenary_study.csv").read_text().splitlines()
    assert rows[0] == "element_length,err_5,mean" and len(rows) == 3
    assert (tmp_path / "catenary_study.svg").is_file()


def test_bench_validation(tmp_path):
    assert cli.main(["bench-rtf", "--counts", "100", "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert cli.main(["bench-rtf", "--sim-seconds", "0", "--out", str(tmp_path)]) == cli.EXIT_CONFIG


def test_bench_small(tmp_path):
    assert cli.main(["bench-rtf", "--counts", "5,10", "--sim-seconds", "0.05", "--repetitions", "1",
                     "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "rtf.csv").read_text().splitlines()
    assert rows[0].startswith("element_count,sim_seconds,wall_seconds,rtf") and len(rows) == 3
