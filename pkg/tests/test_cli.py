import json

import numpy as np
import pytest

from degmhd import cli


def test_config_roundtrip():
    text = """
[run]
seed = 7
out = somewhere

[linear-growth a]
lambda = 32
system = hall
nu = 0.001

[bichar]
field = axisym
"""
    cfg = cli.parse_config(text)
    assert cfg.seed == 7 and len(cfg.points) == 2
    again = cli.parse_config(cfg.serialize())
    assert again == cfg


@pytest.mark.parametrize("text,where", [
    ("[wavepacket]\nlamda = 3\n", "wavepacket.lamda"),
    ("[linear-growth x]\nsystem = mhd\n", "linear-growth x.system"),
    ("[run]\nthreads = 2\n", "run.threads"),
    ("[bichar]\ntol = abc\n", "bichar.tol"),
    ("[nosuch]\n", "nosuch"),
])
def test_config_errors_name_the_key(text, where):
    with pytest.raises(cli.ConfigError) as ei:
        cli.parse_config(text)
    assert str(ei.value).startswith(where)


def test_empty_sweep_exits_zero(tmp_path):
    p = tmp_path / "empty.ini"
    p.write_text("[run]\nseed = 1\n")
    assert cli.main(["run", str(p)]) == cli.EXIT_OK


def test_linear_growth_csv_deterministic(tmp_path, capsys):
    args = ["linear-growth", "--lambda", "32", "--n_out", "8"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == cli.EXIT_OK
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == cli.EXIT_OK
    fa = sorted((tmp_path / "a").rglob("*.csv"))
    fb = sorted((tmp_path / "b").rglob("*.csv"))
    assert len(fa) == 1 and fa[0].read_bytes() == fb[0].read_bytes()
    cols = cli.read_csv(fa[0])
    assert np.all(np.diff(cols["t"]) > 0)
    assert np.all(cols["certified_lower_bound"] > 0)
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["passed"]


def test_plot_slope_and_legend(tmp_path):
    t = np.linspace(0, 2, 21)
    path = cli.write_csv(tmp_path / "g.csv", ["t", "a", "b"], [[x, np.exp(2 * x), np.exp(-x)] for x in t])
    svg, slopes = cli.plot(path, "semilog", "t", None, tmp_path / "g.svg")
    assert slopes["a"] == pytest.approx(2.0, abs=0.01)
    assert slopes["b"] == pytest.approx(-1.0, abs=0.01)
    assert svg.count("<polyline") == 2
    assert "a" in svg and (tmp_path / "g.svg").exists()


def test_csv_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,a\n0,1\n1,2,3\n")
    with pytest.raises(cli.CsvError, match="line 3"):
        cli.read_csv(bad)
    head = tmp_path / "head.csv"
    head.write_text("t,a\n")
    with pytest.raises(cli.CsvError, match="no data"):
        cli.read_csv(head)
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(cli.CsvError):
        cli.read_csv(empty)
    assert cli.main(["plot", str(bad), "--out", str(tmp_path / "x.svg")]) == cli.EXIT_CONFIG


@pytest.mark.parametrize("argv", [
    ["linear-growth", "--r0", "0.1"],
    ["linear-growth", "--s", "1", "--p", "1"],
    ["wavepacket", "--bogus", "1"],
    ["run", "/nonexistent/file.ini"],
])
def test_config_exit_codes(argv, tmp_path):
    assert cli.main(argv + (["--out", str(tmp_path)] if argv[0] != "run" else [])) == cli.EXIT_CONFIG


def test_bad_thread_env(monkeypatch, tmp_path):
    monkeypatch.setenv("DEGMHD_THREADS", "zero")
    assert cli.main(["bichar", "--out", str(tmp_path)]) == cli.EXIT_CONFIG


def test_numerical_failure_exit_code(tmp_path):
    rc = cli.main(["background", "--dt", "10", "--T", "10", "--out", str(tmp_path)])
    assert rc == cli.EXIT_NUMERICAL


def test_bichar_command(tmp_path):
    assert cli.main(["bichar", "--lambda", "16", "--out", str(tmp_path), "--plot"]) == cli.EXIT_OK
    assert list(tmp_path.rglob("*.svg"))
