"""CLI surface: parsing, formats, determinism, exit codes, config."""

import json
import subprocess
import sys

import pytest

from heckeamp.cli import run


def invoke(argv, capsys):
    code = run(argv)
    out = capsys.readouterr().out
    return code, out


def test_degree_example(capsys):
    code, out = invoke(["degree", "--p", "5", "--cotype", "1,0,0"], capsys)
    assert code == 0
    assert "31" in out


def test_orbital_example(capsys):
    code, out = invoke(["orbital", "--p", "7", "--a", "1,0,0", "--b", "1,0,0"], capsys)
    assert code == 0
    fields = out.splitlines()[1].split()
    assert "63" in fields and "6" in fields and "57" in fields


def test_hall_csv_versioned_header(capsys):
    code, out = invoke(
        ["hall", "--p", "3", "--a", "1,0", "--b", "1,0", "--format", "csv"], capsys
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# heckeamp hall csv v")
    assert lines[1] == "p,a,b,cotype,coefficient"
    assert "4" in out and "(2 0)" in out


def test_amp_ratio_json(capsys):
    code, out = invoke(
        ["amp-ratio", "--c", "1", "--c1", "4", "--M", "100", "--format", "json"], capsys
    )
    assert code == 0
    blob = json.loads(out)
    assert blob["term_count"] == 30
    assert blob["config"]["M"] == 100


def test_amp_bounds_exact(capsys):
    code, out = invoke(["amp-bounds", "--M", "30", "--format", "json"], capsys)
    assert code == 0
    blob = json.loads(out)
    assert blob["divisor_sum"] == "12/5"


def test_optimal_c(capsys):
    code, out = invoke(["optimal-c", "--format", "json"], capsys)
    assert code == 0
    blob = json.loads(out)
    assert blob == {"c_star": "1", "value": "6"}


def test_bound_scan_small(capsys):
    code, out = invoke(
        ["bound-scan", "--p-list", "2,3", "--max-entry", "1", "--format", "csv"], capsys
    )
    assert code == 0
    lines = [l for l in out.splitlines() if not l.startswith("#")]
    assert lines[0].startswith("p,a,b,off_diagonal")
    assert len(lines) == 1 + 2 * 9  # 3 reduced cotypes with entries <= 1


def test_restricted_count(capsys):
    code, out = invoke(
        ["restricted-count", "--p", "3", "--cotype", "1,0,0", "--m", "1",
         "--mode", "contained"], capsys
    )
    assert code == 0


def test_identical_argv_identical_bytes(capsys):
    argv = ["bound-scan", "--p-list", "2,3", "--max-entry", "1", "--format", "csv"]
    _, first = invoke(argv, capsys)
    _, second = invoke(argv, capsys)
    assert first == second


def test_usage_error_exit_2():
    proc = subprocess.run(
        [sys.executable, "-m", "heckeamp.cli", "degree", "--p", "5", "--bogus"],
        capture_output=True,
    )
    assert proc.returncode == 2
    proc = subprocess.run([sys.executable, "-m", "heckeamp.cli"], capture_output=True)
    assert proc.returncode == 2


def test_capacity_exit_3(capsys):
    code = run(["degree", "--p", "13", "--cotype", "2,1,0", "--ceiling", "10"])
    capsys.readouterr()
    assert code == 3


def test_verify_padic_section(capsys):
    code, out = invoke(["verify", "--sections", "padic,amplifier"], capsys)
    assert code == 0
    assert "PASS" in out and "FAIL" not in out


def test_config_file_defaults_and_cli_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("p = 5\ncotype = 1,0,0\n")
    code, out = invoke(
        ["degree", "--p", "7", "--cotype", "1,0,0", "--config", str(cfg)], capsys
    )
    assert code == 0
    assert "57" in out  # explicit --p 7 wins over config p = 5

    cfg2 = tmp_path / "run2.cfg"
    cfg2.write_text("# comment\nM = 30\n")
    code, out = invoke(
        ["amp-bounds", "--M", "1", "--config", str(cfg2), "--format", "json"], capsys
    )
    blob = json.loads(out)
    assert blob["M"] == 1  # explicit flag wins
    code, out = invoke(["amp-bounds", "--M", "30", "--format", "json"], capsys)
    assert json.loads(out)["divisor_sum"] == "12/5"


def test_output_file(tmp_path, capsys):
    target = tmp_path / "table.csv"
    code = run(["degree", "--p", "2", "--cotype", "1,0", "--format", "csv",
                "--output", str(target)])
    capsys.readouterr()
    assert code == 0
    text = target.read_text()
    assert "degree" in text and "3" in text


def test_spherical_cli(capsys):
    code, out = invoke(
        ["spherical", "--n", "2", "--nu", "0.8", "--g", "1,0.3,0,1",
         "--k-res", "32", "--format", "json"], capsys
    )
    assert code == 0
    blob = json.loads(out)
    assert blob["converged"] is True
    assert abs(blob["abs"]) <= 1.0 + 1e-9


def test_model_int_cli(capsys):
    code, out = invoke(
        ["model-int", "--n", "2", "--h0", "1.0", "--t-list", "0,4",
         "--k-res", "32", "--a-res", "8", "--format", "csv"], capsys
    )
    assert code == 0
    lines = [l for l in out.splitlines() if not l.startswith("#")]
    assert lines[0].split(",")[0] == "t"
    assert len(lines) == 3


def test_critical_set_cli(capsys):
    code, out = invoke(
        ["critical-set", "--n", "2", "--h0", "1.0", "--seeds", "8",
         "--format", "csv"], capsys
    )
    assert code == 0
    lines = [l for l in out.splitlines() if not l.startswith("#")]
    assert "0,1,1" in out
    assert len(lines) >= 2
