"""Tests for the command-line interface: parsing, exit codes, workflows."""

import numpy as np
import pytest

from swflood.cli import (
    BuildDsmCommand,
    RunCommand,
    UsageError,
    ValidateCommand,
    _resolve_blocks,
    main,
    parse_args,
)
from swflood.raster import RasterGrid, load_raster, write_ascii_grid
from swflood.simulation import ConfigError


# --------------------------------------------------------------------------
# Argument parsing
# --------------------------------------------------------------------------


def test_parse_run_command():
    cmd = parse_args(["run", "--config", "s.cfg", "--blocks", "4"])
    assert cmd == RunCommand(config=cmd.config, blocks=4)
    assert str(cmd.config) == "s.cfg"
    assert parse_args(["run", "--config", "s.cfg"]).blocks is None


def test_parse_build_dsm_command():
    cmd = parse_args(["build-dsm", "--dtm", "a.asc", "--features", "f.txt",
                      "--classes", "c.txt", "--out", "d.asc"])
    assert isinstance(cmd, BuildDsmCommand)
    assert (str(cmd.dtm), str(cmd.features)) == ("a.asc", "f.txt")
    assert cmd.close_tolerance == 0.1
    custom = parse_args(["build-dsm", "--dtm", "a.asc", "--features", "f.txt",
                         "--classes", "c.txt", "--out", "d.asc",
                         "--close-tolerance", "0.25"])
    assert custom.close_tolerance == 0.25


def test_parse_validate_command():
    cmd = parse_args(["validate", "--case", "ritter", "--n", "400"])
    assert cmd == ValidateCommand(case="ritter", n=400, report=None)


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["run"],
    ["run", "--config", "s.cfg", "--unknown"],
    ["run", "--config", "s.cfg", "--blocks", "0"],
    ["validate", "--case", "bogus", "--n", "100"],
    ["validate", "--case", "ritter", "--n", "5"],
    ["build-dsm", "--dtm", "a", "--features", "f", "--classes", "c",
     "--out", "d", "--close-tolerance", "-1"],
])
def test_parse_rejects_bad_usage(argv):
    with pytest.raises(UsageError):
        parse_args(argv)


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert "build-dsm" in capsys.readouterr().out


def test_bad_usage_exits_one(capsys):
    assert main(["run"]) == 1
    assert "error" in capsys.readouterr().err


# --------------------------------------------------------------------------
# Block count resolution
# --------------------------------------------------------------------------


def test_resolve_blocks_precedence(monkeypatch):
    monkeypatch.delenv("SWFLOOD_BLOCKS", raising=False)
    assert _resolve_blocks(None) == 1
    assert _resolve_blocks(4) == 4
    monkeypatch.setenv("SWFLOOD_BLOCKS", "9")
    assert _resolve_blocks(None) == 9
    assert _resolve_blocks(4) == 4  # the flag wins
    monkeypatch.setenv("SWFLOOD_BLOCKS", "zero")
    with pytest.raises(ConfigError, match="must be an integer"):
        _resolve_blocks(None)
    monkeypatch.setenv("SWFLOOD_BLOCKS", "0")
    with pytest.raises(ConfigError, match="at least 1"):
        _resolve_blocks(None)


# --------------------------------------------------------------------------
# Workflows end to end
# --------------------------------------------------------------------------


def write_scenario(tmp_path, extra=""):
    col = np.arange(10, dtype=np.float64)
    z = np.tile(0.02 * (9.0 - col), (8, 1))
    grid = RasterGrid(10, 8, 0.0, 0.0, 1.0, values=z)
    (tmp_path / "terrain.asc").write_text(write_ascii_grid(grid))
    (tmp_path / "riverbed.txt").write_text("3 0\n4 0\n")
    (tmp_path / "hydro.txt").write_text("0 1.0\n5 2.0\n")
    cfg = tmp_path / "scenario.cfg"
    cfg.write_text(f"""\
dsm = terrain.asc
output_dir = out
total_duration = 4
snapshot_interval = 2
spinup_duration = 1
spinup_q = 0.5
boundary.west = discharge
boundary.east = free_outflow
riverbed_mask = riverbed.txt
hydrograph = hydro.txt
{extra}""")
    return cfg


def summary_value(tmp_path, key):
    text = (tmp_path / "out" / "summary.txt").read_text()
    return dict(line.split(" = ", 1) for line in text.strip().splitlines())[key]


def test_run_workflow_exit_zero(tmp_path, monkeypatch):
    monkeypatch.setenv("SWFLOOD_BLOCKS", "2")
    cfg = write_scenario(tmp_path)
    assert main(["run", "--config", str(cfg)]) == 0
    assert (tmp_path / "out" / "h_000004.asc").exists()
    assert summary_value(tmp_path, "status") == "completed"
    assert summary_value(tmp_path, "blocks") == "2"


def test_run_workflow_flag_overrides_env(tmp_path, monkeypatch):
    monkeypatch.setenv("SWFLOOD_BLOCKS", "2")
    cfg = write_scenario(tmp_path)
    assert main(["run", "--config", str(cfg), "--blocks", "1"]) == 0
    assert summary_value(tmp_path, "blocks") == "1"


def test_run_missing_dsm_exits_one(tmp_path):
    cfg = write_scenario(tmp_path)
    (tmp_path / "terrain.asc").unlink()
    assert main(["run", "--config", str(cfg)]) == 1


def test_run_numerical_abort_exits_two(tmp_path):
    # dt_min above the CFL step aborts the first step
    cfg = write_scenario(tmp_path, extra="initial_h = 1\ndt_min = 1\ndt_max = 10\n")
    assert main(["run", "--config", str(cfg)]) == 2
    assert summary_value(tmp_path, "status") == "aborted"


def test_build_dsm_workflow_round_trip(tmp_path):
    from swflood.features import parse_features
    from swflood.rasterize import build_dsm

    dtm = RasterGrid(6, 6, 0.0, 0.0, 1.0, values=np.zeros((6, 6)))
    (tmp_path / "dtm.asc").write_text(write_ascii_grid(dtm))
    feature_text = "10;LINE;0.5 2.5 2,4.5 2.5 2\n20;POINT;1.5 4.5 7\n"
    (tmp_path / "features.txt").write_text(feature_text)
    (tmp_path / "classes.txt").write_text("10\n20\n")
    out = tmp_path / "dsm.asc"
    assert main(["build-dsm", "--dtm", str(tmp_path / "dtm.asc"),
                 "--features", str(tmp_path / "features.txt"),
                 "--classes", str(tmp_path / "classes.txt"),
                 "--out", str(out)]) == 0
    written = load_raster(out)
    expected = build_dsm(dtm, parse_features(feature_text), {10, 20})
    np.testing.assert_array_equal(written.values, expected.values)
    # the hand trace: y = 2.5 lands on row 3, the point on row 1
    assert (written.values[3, 0:5] == 2.0).all()
    assert written.values[1, 1] == 7.0


def test_build_dsm_bad_features_exits_one(tmp_path):
    dtm = RasterGrid(4, 4, 0.0, 0.0, 1.0, values=np.zeros((4, 4)))
    (tmp_path / "dtm.asc").write_text(write_ascii_grid(dtm))
    (tmp_path / "features.txt").write_text("10;BLOB;0 0 0\n")
    (tmp_path / "classes.txt").write_text("10\n")
    assert main(["build-dsm", "--dtm", str(tmp_path / "dtm.asc"),
                 "--features", str(tmp_path / "features.txt"),
                 "--classes", str(tmp_path / "classes.txt"),
                 "--out", str(tmp_path / "d.asc")]) == 1


def test_validate_workflow_stdout_and_file(tmp_path, capsys):
    assert main(["validate", "--case", "lake-at-rest", "--n", "16"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("case,n,dx,L1,L2,Linf,order")
    assert "lake-at-rest,16," in out
    report = tmp_path / "norms.csv"
    assert main(["validate", "--case", "lake-at-rest", "--n", "16",
                 "--report", str(report)]) == 0
    assert report.read_text() == out
