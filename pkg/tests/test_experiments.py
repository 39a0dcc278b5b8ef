import json
from pathlib import Path

import numpy as np
import pytest

from liouvex.config import parse_config
from liouvex.csvio import read_csv_columns
from liouvex.experiments import run_experiment

HYDRO = """
[chain]
n_sites = 6
[schedule]
dt = 0.002
t_max = 0.6
[window]
duration = 0.3
stride = 0.1
[ensemble]
size = 4
base_seed = 99
[experiment]
kind = hydro
[analysis]
t0 = 0.15
t1 = 0.45
margin = 1
dt_cg_list = 0.04
"""

QUENCH = """
[chain]
n_sites = 5
[schedule]
dt = 0.002
t_max = 1.2
[window]
duration = 0.3
stride = 0.1
[ensemble]
size = 2
base_seed = 1
[experiment]
kind = quench
dictionaries = S, L, E, full
cut_after_site = 1
t_q = 0.601
"""

VALIDATE = """
[chain]
n_sites = 4
[schedule]
t_max = 0.6
[ensemble]
size = 1
base_seed = 3
[experiment]
kind = validate
dictionaries = full, A
recon_site = 2
[analysis]
t1 = 0.3
dt_cg_list = 0.04
"""


def csv_bytes(d: Path):
    return {p.name: p.read_bytes() for p in sorted(d.glob("*.csv"))}


def test_hydro_outputs_and_thread_independence(tmp_path):
    plan = parse_config(HYDRO)
    a = run_experiment(plan, tmp_path / "t1", threads=1)
    b = run_experiment(plan, tmp_path / "t3", threads=3)
    assert csv_bytes(a.out_dir) == csv_bytes(b.out_dir)
    assert set(csv_bytes(a.out_dir)) == {"hydro_profile.csv", "hydro_bulk.csv", "cg_sweep.csv"}
    prof = read_csv_columns(a.out_dir / "hydro_profile.csv")
    assert set(prof["dt_cg"]) == {0.0, 0.04}
    exact = prof["dt_cg"] == 0
    # exact continuity leaves dz at the conditioning floor of this tiny ensemble
    assert np.nanmax(np.abs(prof["dz"][exact])) < 1e-6
    man = json.loads((a.out_dir / "manifest.json").read_text())
    assert len(man["seeds"]) == 4 and set(man["files"]) == set(csv_bytes(a.out_dir))


def test_seed_changes_output(tmp_path):
    import dataclasses
    plan = parse_config(HYDRO)
    a = run_experiment(plan, tmp_path / "a")
    b = run_experiment(dataclasses.replace(plan, base_seed=100), tmp_path / "b")
    assert csv_bytes(a.out_dir)["cg_sweep.csv"] != csv_bytes(b.out_dir)["cg_sweep.csv"]


def test_quench_snaps_and_conserves_environment(tmp_path):
    res = run_experiment(parse_config(QUENCH), tmp_path)
    assert res.warnings and "snapped down to 0.6" in res.warnings[0]
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["switch_step"] == 300
    assert res.summary["env_drift_pre"] < 1e-9 < res.summary["env_drift_post"]
    full = res.summary["spectra"][("full", 0.0)]
    # windows straddling t_q mix two generators and are excluded
    clean = [r for r in full if r["phase"] != 1]
    assert len(clean) == 8
    assert max(r["max_abs_re"] / r["max_abs_im"] for r in clean) < 1e-6
    tr = read_csv_columns(tmp_path / "trace_S_exact.csv")
    assert set(tr["phase"]) == {0.0, 1.0, 2.0}


def test_validate_full_basis_is_unitary_and_reconstructs(tmp_path):
    res = run_experiment(parse_config(VALIDATE), tmp_path)
    exact = res.summary["spectra"][("full", 0.0)][0]
    fd = res.summary["spectra"][("full", 0.04)][0]
    assert exact["max_abs_re"] < 1e-6 * exact["max_abs_im"]
    assert fd["min_re"] < -1e-3
    assert res.summary["recon_max_err"]["full"] < 1e-8
    cols = read_csv_columns(tmp_path / "reconstruction.csv")
    assert cols["time"][0] == 0 and len(cols["time"]) == 301
    np.testing.assert_allclose(cols["full_abs_err"], np.abs(cols["full_pred"] - cols["exact"]))
