import subprocess
import sys

import numpy as np
import pytest

from schmid_lab.cli import parse_grid, read_config_file, resolve_config, run
from schmid_lab.errors import ConfigError
from schmid_lab.io import read_pgm, read_table

SMALL = ["--nm", "3", "--ecut", "4", "--nbands", "3", "--k", "3"]


def test_parse_grid_forms():
    assert np.allclose(parse_grid("0:1:5"), [0, 0.25, 0.5, 0.75, 1])
    assert np.allclose(parse_grid("0.1, 0.3,0.7"), [0.1, 0.3, 0.7])
    assert np.allclose(parse_grid("2"), [2.0])
    for bad in ("", "1,0", "0:1:0", "a,b", "0,nan"):
        with pytest.raises(ConfigError):
            parse_grid(bad, "zgrid")


def test_config_file_and_flag_precedence(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# comment\nej = 0.3\nnm=4\necut-grid = 4,5\n\n")
    assert read_config_file(cfg_file)["ecut_grid"] == "4,5"
    cfg = resolve_config("bands", {"nm": "7"}, cfg_file)
    assert cfg.ej == 0.3 and cfg.nm == 7
    assert np.allclose(cfg.ecut_grid, [4, 5])
    assert cfg.spec().n_modes == 7


def test_command_defaults_below_file(tmp_path):
    assert resolve_config("crossings", {}).wp == 5.0
    cfg_file = tmp_path / "c.cfg"
    cfg_file.write_text("wp=3\n")
    assert resolve_config("crossings", {}, cfg_file).wp == 3.0


def test_unknown_config_key(tmp_path):
    cfg_file = tmp_path / "bad.cfg"
    cfg_file.write_text("colour=blue\n")
    with pytest.raises(ConfigError):
        read_config_file(cfg_file)


def test_header_records_parameters(tmp_path):
    assert run(["modes", "--nm", "4", "--z", "0.8", "--out", str(tmp_path)]) == 0
    table = read_table(tmp_path / "modes.csv")
    assert table.meta["command"] == "modes"
    assert table.meta["nm"] == "4" and table.meta["z"] == "0.8"
    assert "out" not in table.meta and "workers" not in table.meta
    assert float(table.meta["sum_rule_residual"]) < 1e-12
    assert len(table.rows) == 4
    assert np.all(np.diff(table.column("omega")) > 0)


def test_bands_output_identical_across_workers(tmp_path):
    args = ["bands", "--zgrid", "0.5,1.5", "--nugrid", "0,0.25,0.5", *SMALL]
    assert run(args + ["--workers", "1", "--out", str(tmp_path / "a")]) == 0
    assert run(args + ["--workers", "2", "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "bands.csv").read_bytes() == (tmp_path / "b" / "bands.csv").read_bytes()
    table = read_table(tmp_path / "a" / "bands.csv")
    assert len(table.rows) == 2 * 3 * 3


def test_gap_observables_converge(tmp_path):
    out = str(tmp_path)
    assert run(["gap", "--zgrid", "0.5,1", *SMALL, "--out", out]) == 0
    assert run(["observables", "--zgrid", "0.5,1", *SMALL, "--out", out]) == 0
    assert run(["converge", "--nm", "3", "--ecut-grid", "2,3", "--nbands-grid", "2,3", "--k", "2", "--out", out]) == 0
    gap = read_table(tmp_path / "gap.csv")
    assert np.all(gap.column("gap") > 0)
    obs = read_table(tmp_path / "observables.csv")
    assert float(obs.meta["cpb_sigma2"]) > 0
    conv = read_table(tmp_path / "converge.csv")
    assert conv.columns == ["e_cut", "n_bands", "level", "energy"]
    assert len(conv.rows) == 2 * 2 * 2


def test_spectral_with_heatmap(tmp_path):
    args = ["spectral", "--wp", "2", "--nm", "3", "--ecut", "3", "--k", "8", "--phigrid=-0.5,0,0.5",
            "--ewindow", "0.2,0.6", "--n-energies", "41", "--pgm", "--out", str(tmp_path)]
    assert run(args) == 0
    table = read_table(tmp_path / "spectral.csv")
    assert len(table.rows) == 3 * 41
    assert read_pgm(tmp_path / "spectral.pgm").shape == (41, 3)  # energy rows, flux columns


def test_renorm_example(tmp_path):
    assert run(["renorm", "--zgrid", "0.05:2:100", "--sizes", "8,16,32,64", "--out", str(tmp_path)]) == 0
    crossings = read_table(tmp_path / "renorm_crossings.csv")
    near = [z for z in crossings.column("z_star") if abs(z - 1) < 0.5]
    assert near and all(abs(z - 1) < 0.05 for z in near)
    slope = read_table(tmp_path / "renorm_slope.csv")
    assert float(slope.meta["fit_r2"]) >= 0.99


def test_exit_codes(tmp_path, capsys):
    assert run(["modes", "--nm", "-2", "--out", str(tmp_path)]) == 2
    assert "nm" in capsys.readouterr().err
    assert run(["bands", "--zgrid", "1,0.5", "--out", str(tmp_path)]) == 2
    assert run(["bands", "--tol", "0", "--out", str(tmp_path)]) == 2
    assert run(["nonsense"]) == 2
    args = ["bands", "--nm", "6", "--ecut", "6", "--k", "4", "--tol", "1e-15", "--max-restarts", "0",
            "--zgrid", "1", "--nugrid", "0.3", "--out", str(tmp_path)]
    assert run(args) == 3


def test_selftest_passes():
    proc = subprocess.run([sys.executable, "-m", "schmid_lab.cli", "selftest"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "FAIL" not in proc.stdout and "PASS" in proc.stdout
