import pytest

from liouvex.cli import main
from liouvex.csvio import read_csv

SMALL_HYDRO = """
[chain]
n_sites = 6
[schedule]
dt = 0.001
t_max = 0.5
[window]
duration = 0.3
stride = 0.1
[ensemble]
size = 3
base_seed = 5
[experiment]
kind = hydro
[analysis]
t0 = 0.15
t1 = 0.35
margin = 1
"""


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text(SMALL_HYDRO)
    return p


def test_missing_config_exits_1_with_usage(capsys):
    assert main(["oracle"]) == 1
    err = capsys.readouterr().err
    assert "usage:" in err and "--config" in err


def test_unknown_command_exits_1(capsys):
    assert main(["frobnicate", "--config", "x"]) == 1


def test_bad_config_exits_1(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("[experiment]\nkind = hydro\n[chain]\nspin = 1\n")
    assert main(["hydro", "--config", str(p), "--out", str(tmp_path / "o")]) == 1
    assert "spin" in capsys.readouterr().err


def test_oracle_all_pass(cfg, tmp_path):
    out = tmp_path / "oracle"
    assert main(["oracle", "--config", str(cfg), "--out", str(out)]) == 0
    _, header, rows = read_csv(out / "oracle_report.csv")
    assert header[-1] == "pass" and rows and all(r[-1] == "1" for r in rows)
    assert (out / "manifest.json").exists()


def test_sweep_six_rows(cfg, tmp_path):
    out = tmp_path / "sweep"
    code = main(["sweep", "--config", str(cfg), "--out", str(out),
                 "--dt-cg", "0,0.01,0.025,0.04,0.1,0.2"])
    assert code == 0
    _, header, rows = read_csv(out / "cg_sweep.csv")
    assert header == ["dt_cg", "c2", "gamma", "nu", "d", "dz"]
    assert [r[0] for r in rows] == ["0", "0.01", "0.025", "0.04", "0.1", "0.2"]


def test_dt_cg_flag_only_for_sweep(cfg, tmp_path):
    assert main(["hydro", "--config", str(cfg), "--out", str(tmp_path), "--dt-cg", "0.01"]) == 1


def test_dump_dictionary(cfg, tmp_path):
    assert main(["dump-dictionary", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    meta, header, rows = read_csv(tmp_path / "dictionary_hydro.csv")
    assert meta["entries"] == str(8 * 6 - 11)
    assert header == ["row", "name", "role", "word", "coeff"]
    assert rows[0] == ["0", "Z0", "density", "ZIIIII", "1"]


def test_numerical_error_exits_2(cfg, tmp_path, monkeypatch):
    from liouvex import experiments
    from liouvex.errors import PropagationError

    def boom(*a, **k):
        raise PropagationError("forced")

    monkeypatch.setattr(experiments, "simulate", boom)
    assert main(["hydro", "--config", str(cfg), "--out", str(tmp_path)]) == 2
