import json
import subprocess
import sys

import pytest

from helmholtz_qmc.cli import run
from helmholtz_qmc.config import ConfigError, RunConfig, apply_overrides, parse_config
from helmholtz_qmc.estimator import config_from_csv, read_csv

MINIMAL = {"k": 6.2832, "p": 2, "m_e": 16, "s": 8, "N": 257, "R": 8, "rule": "lattice-pod",
           "field": {"n0": 1, "amplitude": 0.2, "theta": 4, "s": 8},
           "p0": 0.5, "p1": 0.6, "delta": 0.1, "seed": 42}

FAST = ["m_e=4", "s=2", "field.s=2", "N=7", "R=2"]


def write_config(tmp_path, data):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(data))
    return str(path)


def cli(tmp_path, *args, overrides=FAST):
    argv = list(args) + ["-o", str(tmp_path / "out")]
    for o in overrides:
        argv += ["--set", o]
    return run(argv)


def test_minimal_config_parses(tmp_path):
    cfg = parse_config(write_config(tmp_path, MINIMAL))
    assert cfg.k == 6.2832 and cfg.field.theta == 4.0 and cfg.side == 1.0


def test_degree_one_exit_code(tmp_path, capsys):
    path = write_config(tmp_path, dict(MINIMAL, p=1))
    assert run(["constants", "-c", path, "-o", str(tmp_path)]) == 2
    assert "p:" in capsys.readouterr().err


def test_unknown_key_exit_code(tmp_path, capsys):
    path = write_config(tmp_path, dict(MINIMAL, meshh=3))
    assert run(["constants", "-c", path, "-o", str(tmp_path)]) == 2
    assert "meshh" in capsys.readouterr().err


def test_unknown_nested_key():
    with pytest.raises(ConfigError, match="field.decay"):
        apply_overrides(RunConfig(), ["field.decay=2"])


def test_type_errors_name_the_path():
    with pytest.raises(ConfigError, match="m_e"):
        apply_overrides(RunConfig(), ['m_e="many"'])


def test_unknown_subcommand(tmp_path):
    with pytest.raises(SystemExit):
        run(["plot"])


def test_missing_config_file(tmp_path):
    assert run(["constants", "-c", str(tmp_path / "nope.json")]) == 2


def test_constants_csv(tmp_path):
    assert cli(tmp_path, "constants", overrides=["kL_list=[1, 10, 100]"]) == 0
    comments, rows = read_csv((tmp_path / "out" / "constants.csv").read_text())
    assert [float(r["kL"]) for r in rows] == [1.0, 10.0, 100.0]
    assert len({r["c_coer"] for r in rows}) == 1
    assert list(rows[0]) == ["kL", "c_coer", "c_cont", "c_func", "c_r", "c_regu"]


def test_check_field_violation(tmp_path, capsys):
    assert cli(tmp_path, "check-field", overrides=["field.amplitude=5.0"]) == 3
    assert "assumption" in capsys.readouterr().err


def test_check_field_ok(tmp_path):
    assert cli(tmp_path, "check-field", overrides=[]) == 0
    _, rows = read_csv((tmp_path / "out" / "check_field.csv").read_text())
    names = [r["quantity"] for r in rows]
    assert "s_star" in names and "tail1_bound" in names


def test_solve_with_dump(tmp_path):
    assert cli(tmp_path, "solve", "--dump-system") == 0
    out = tmp_path / "out"
    assert (out / "matrix.mtx").read_text().startswith("%%MatrixMarket matrix coordinate complex general")
    _, rows = read_csv((out / "solve.csv").read_text())
    assert complex(rows[0]["mean"]) != 0


def test_rule_export_import(tmp_path):
    rule = tmp_path / "rule.txt"
    assert cli(tmp_path, "cbc-construct", "--export-rule", str(rule)) == 0
    assert rule.read_text().startswith("# family=lattice N=7 s=2")
    assert cli(tmp_path, "solve", "--import-rule", str(rule)) == 0
    _, rows = read_csv((tmp_path / "out" / "solve.csv").read_text())
    assert rows[0]["N"] == "7"


def test_cbc_interlaced(tmp_path):
    args = ["integrand=\"product\"", "rule=\"interlaced-spod\"", "s=3", "N=32"]
    assert cli(tmp_path, "cbc-construct", overrides=args) == 0
    text = (tmp_path / "out" / "rule.txt").read_text()
    assert text.startswith("# family=interlaced m=5 s=3 alpha=2")


def test_qmc_csv_round_trip(tmp_path):
    args = ["integrand=\"product\"", "s=4", "R=4", "N_list=[16, 32, 64, 128]"]
    assert cli(tmp_path, "qmc-convergence", overrides=args) == 0
    path = tmp_path / "out" / "qmc_lattice-pod.csv"
    first = path.read_text()
    comments, rows = read_csv(first)
    assert len(rows) == 4 and float(rows[0]["slope"]) < 0
    # rerunning from the echoed config reproduces the bytes
    cfg = config_from_csv(first)
    cfg_path = write_config(tmp_path, cfg.to_dict())
    path.unlink()
    assert run(["qmc-convergence", "-c", cfg_path, "-o", str(tmp_path / "out")]) == 0
    assert path.read_text() == first


def test_regularity_check(tmp_path):
    args = FAST + ["max_order=2", "dims=2", "n_y=2"]
    assert cli(tmp_path, "regularity-check", overrides=args) == 0
    _, rows = read_csv((tmp_path / "out" / "regularity.csv").read_text())
    assert len(rows) == 2 * 6 and all(r["pass"] == "True" for r in rows)


def test_module_help():
    res = subprocess.run([sys.executable, "-m", "helmholtz_qmc", "--help"], capture_output=True,
                         text=True)
    assert res.returncode == 0 and "Config defaults" in res.stdout
