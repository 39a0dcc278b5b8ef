"""End-to-end runs over seeded ensembles, writing the CSV artifact set.

Trajectories are generated in parallel over ensemble members and windows are
fitted in parallel, but every result lands in a pre-assigned slot and files
are written by one thread in fixed order, so outputs do not depend on the
worker count.
"""

from __future__ import annotations

import hashlib
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import plan_sections, render
from .csvio import format_number, write_csv, write_manifest
from .dictionary import Dictionary, build_dictionary
from .gedmd import (
    LiouvillianEstimate,
    WindowSpec,
    assemble_block,
    fit_liouvillian,
    liouvillian_trace,
    reconstruct,
    spectrum,
    window_centers,
)
from .hamiltonian import build_hamiltonian, build_quench_pair
from .hydro import COEFFS, bulk_median, extract_coefficients, time_average
from .pauli import PauliString
from .plan import ExperimentPlan, member_seeds
from .propagator import Propagator, TrajectoryRecord, random_state, run_trajectory


@dataclass
class RunResult:
    out_dir: Path
    files: list[Path]
    warnings: list[str] = field(default_factory=list)
    summary: dict = field(default_factory=dict)


def mode_tag(dt_cg: float) -> str:
    return "exact" if dt_cg == 0 else f"cg{format_number(dt_cg)}"


def _pmap(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


class _Writer:
    """Collects output paths and stamps every CSV with the plan hash."""

    def __init__(self, out_dir: Path, plan: ExperimentPlan):
        self.out_dir = out_dir
        self.files: list[Path] = []
        self.config_hash = hashlib.sha256(
            render(plan, include_output=False).encode()).hexdigest()

    def csv(self, name: str, header, rows, units: str = "") -> Path:
        meta = {"config_sha256": self.config_hash}
        if units:
            meta["units"] = units
        path = write_csv(self.out_dir / name, header, rows, meta)
        self.files.append(path)
        return path


def simulate(plan: ExperimentPlan, dictionaries: Sequence[Dictionary],
             threads: int = 1) -> tuple[list[list[TrajectoryRecord]], list[int], dict]:
    """Evolve every ensemble member; returns ``records[dict_index][member]``."""
    seeds = member_seeds(plan.base_seed, plan.ensemble_size)
    info: dict = {}
    h_after = switch_step = None
    if plan.kind == "quench":
        h_iso, h_coupled = build_quench_pair(plan.chain, plan.quench)
        prop = Propagator(h_iso)
        h_after = Propagator(h_coupled)
        switch_step = int(math.floor(plan.quench.t_q / plan.schedule.dt + 1e-9))
        t_snap = switch_step * plan.schedule.dt
        info["switch_step"] = switch_step
        info["t_q_effective"] = t_snap
        if abs(t_snap - plan.quench.t_q) > 1e-9:
            info["warning"] = (f"t_q={plan.quench.t_q!r} is off the dt grid; "
                               f"snapped down to {t_snap!r}")
    else:
        prop = Propagator(build_hamiltonian(plan.chain))

    def one(seed):
        psi0 = random_state(plan.chain.n_sites, seed)
        recs = run_trajectory(psi0, prop, plan.schedule, list(dictionaries), "exact",
                              h_after=h_after, switch_step=switch_step)
        for r in recs:
            r.seed = seed
        return recs

    per_member = _pmap(one, seeds, threads)
    by_dict = [[per_member[m][d] for m in range(len(seeds))] for d in range(len(dictionaries))]
    return by_dict, seeds, info


def fit_windows(records: Sequence[TrajectoryRecord], window: WindowSpec,
                centers: Sequence[float], threads: int = 1) -> list[LiouvillianEstimate]:
    return _pmap(lambda c: fit_liouvillian(assemble_block(records, window, c)),
                 list(centers), threads)


def _sorted_eigs(est: LiouvillianEstimate) -> np.ndarray:
    ev = spectrum(est)
    return ev[np.lexsort((ev.real, ev.imag))]


def _spectral_files(w: _Writer, name: str, tag: str, ests: Sequence[LiouvillianEstimate],
                    extra: Callable[[float], list] | None = None,
                    extra_cols: Sequence[str] = ()) -> list[dict]:
    spec_rows, trace_rows, resid_rows, summary = [], [], [], []
    for est in ests:
        ev = _sorted_eigs(est)
        for k, lam in enumerate(ev):
            spec_rows.append((est.t_center, k, lam.real, lam.imag))
        tr = liouvillian_trace(est)
        max_re = float(np.max(np.abs(ev.real)))
        trace_rows.append((est.t_center, tr, max_re, *(extra(est.t_center) if extra else ())))
        resid_rows.append((est.t_center, est.rank, est.n_obs, est.m_samples, est.residual_rms,
                           est.sv_kept[0], est.sv_kept[-1]))
        summary.append({"t_center": est.t_center, "trace": tr, "max_abs_re": max_re,
                        "min_re": float(ev.real.min()), "max_abs_im": float(np.abs(ev.imag).max())})
    w.csv(f"spectrum_{name}_{tag}.csv", ("t_center", "eig_index", "re", "im"), spec_rows,
          units="t_center in 1/J; eigenvalues in J")
    w.csv(f"trace_{name}_{tag}.csv", ("t_center", "trace", "max_abs_re", *extra_cols),
          trace_rows, units="t_center in 1/J; trace and max_abs_re in J")
    w.csv(f"residual_{name}_{tag}.csv",
          ("t_center", "rank", "n_obs", "m_samples", "residual_rms", "sv_max", "sv_min_kept"),
          resid_rows)
    return summary


def _find_word_row(dictionary: Dictionary, word: PauliString) -> int:
    for i, e in enumerate(dictionary.entries):
        if len(e) == 1 and e.terms[0][1] == word and e.terms[0][0] == 1.0:
            return i
    raise KeyError(f"dictionary {dictionary.name} has no plain {word.compact()} entry")


def _horizon_block(records: Sequence[TrajectoryRecord], dt_cg: float, span: float):
    rdt = float(records[0].times[1] - records[0].times[0])
    n_times = len(records[0].times)
    n_use = n_times if span <= 0 else int(round(span / rdt)) + 1
    duration = n_use * rdt
    window = WindowSpec(duration, duration).finite(dt_cg)
    return assemble_block(records, window, duration / 2)


def _resolve_dicts(plan: ExperimentPlan) -> list[Dictionary]:
    cut = plan.quench.cut_after_site if plan.quench is not None else None
    return [build_dictionary(name, plan.chain, cut, plan.full_cap) for name in plan.dictionaries]


def run_validate(plan: ExperimentPlan, out_dir, threads: int = 1) -> RunResult:
    """Spectra per dictionary and derivative mode, plus a reconstruction series."""
    out_dir = Path(out_dir)
    w = _Writer(out_dir, plan)
    dicts = _resolve_dicts(plan)
    records, seeds, info = simulate(plan, dicts, threads)
    rdt = plan.schedule.record_dt
    centers = window_centers(plan.window.duration, plan.window.stride, plan.t_max, rdt,
                             plan.t0, plan.t1)
    summary: dict = {"spectra": {}}
    for name, d, recs in zip(plan.dictionaries, dicts, records):
        for dtc in plan.all_dt_cg():
            ests = fit_windows(recs, plan.window.finite(dtc), centers, threads)
            summary["spectra"][(name, dtc)] = _spectral_files(w, name, mode_tag(dtc), ests)
    if plan.recon_site >= 0:
        word = PauliString.from_sites(plan.chain.n_sites, {plan.recon_site: "Z"})
        dtc = plan.all_dt_cg()[0]
        times = records[0][0].times
        if plan.recon_span > 0:
            times = times[: int(round(plan.recon_span / rdt)) + 1]
        cols = {}
        header = ["time", "exact"]
        for name, d, recs in zip(plan.dictionaries, dicts, records):
            row = _find_word_row(d, word)
            est = fit_liouvillian(_horizon_block(recs, dtc, plan.recon_span))
            pred = reconstruct(est, recs[0].x[0], times - times[0], rows=[row])[:, 0]
            truth = recs[0].x[: len(times), row]
            cols["exact"] = truth
            cols[f"{name}_pred"] = pred
            cols[f"{name}_abs_err"] = np.abs(pred - truth)
            header += [f"{name}_pred", f"{name}_abs_err"]
            summary.setdefault("recon_max_err", {})[name] = float(np.max(np.abs(pred - truth)))
            summary.setdefault("recon_rank", {})[name] = est.rank
        rows = [(t, *(cols[h][k] for h in header[1:])) for k, t in enumerate(times)]
        w.csv("reconstruction.csv", header, rows, units=f"time in 1/J; <Z_{plan.recon_site}>")
    return _finish(plan, w, seeds, info, summary)


def _window_phase(center: float, duration: float, t_q: float) -> int:
    """0 before the quench, 1 straddling it, 2 entirely after it."""
    start = center - duration / 2
    end = center + duration / 2
    if end <= t_q + 1e-9:
        return 0
    if start >= t_q - 1e-9:
        return 2
    return 1


def run_quench(plan: ExperimentPlan, out_dir, threads: int = 1) -> RunResult:
    """Trace, spectrum and dissipation-pole series across an interaction quench.

    Each trace row carries a ``phase`` column: 0 for windows ending before
    ``t_q``, 1 for windows straddling it and 2 for windows starting at or
    after it.
    """
    out_dir = Path(out_dir)
    w = _Writer(out_dir, plan)
    dicts = _resolve_dicts(plan)
    records, seeds, info = simulate(plan, dicts, threads)
    t_q = info["t_q_effective"]
    rdt = plan.schedule.record_dt
    centers = window_centers(plan.window.duration, plan.window.stride, plan.t_max, rdt,
                             plan.t0, plan.t1)

    def phase(c):
        return [_window_phase(c, plan.window.duration, t_q)]

    summary: dict = {"spectra": {}, "t_q": t_q}
    for name, d, recs in zip(plan.dictionaries, dicts, records):
        for dtc in plan.all_dt_cg():
            ests = fit_windows(recs, plan.window.finite(dtc), centers, threads)
            rows = _spectral_files(w, name, mode_tag(dtc), ests, phase, ("phase",))
            for r in rows:
                r["phase"] = phase(r["t_center"])[0]
            summary["spectra"][(name, dtc)] = rows
        if name == "E":
            x = np.stack([r.x[:, 0] for r in recs])
            dev = np.max(np.abs(x - x[:, :1]), axis=0)
            times = recs[0].times
            w.csv("env_energy.csv", ("time", "mean", "max_abs_drift"),
                  zip(times, x.mean(axis=0), dev), units="time in 1/J; energy in J")
            pre = times <= t_q + 1e-12
            summary["env_drift_pre"] = float(dev[pre].max())
            summary["env_drift_post"] = float(dev[~pre].max()) if np.any(~pre) else 0.0
    return _finish(plan, w, seeds, info, summary)


def run_hydro(plan: ExperimentPlan, out_dir, threads: int = 1) -> RunResult:
    """Hydrodynamic profiles, bulk medians and the coarse-graining sweep.

    ``hydro_profile.csv`` and ``hydro_bulk.csv`` carry a leading ``dt_cg``
    column (0 for exact derivatives) so one file holds every mode.
    ``cg_sweep.csv`` averages the bulk medians over windows centred in
    ``[t0, t1]``.
    """
    out_dir = Path(out_dir)
    w = _Writer(out_dir, plan)
    dicts = _resolve_dicts(plan)
    d_index = plan.dictionaries.index("hydro")
    records, seeds, info = simulate(plan, [dicts[d_index]], threads)
    recs = records[0]
    hd = dicts[d_index]
    rdt = plan.schedule.record_dt
    centers = window_centers(plan.window.duration, plan.window.stride, plan.t_max, rdt)
    n = plan.chain.n_sites
    prof_rows, bulk_rows, sweep_rows = [], [], []
    summary: dict = {"bulk": {}, "sweep": {}}
    for dtc in plan.all_dt_cg():
        ests = fit_windows(recs, plan.window.finite(dtc), centers, threads)
        series = []
        for est in ests:
            p = extract_coefficients(est, hd)
            for site in range(n):
                vals = [p.get(c)[site] if site < len(p.get(c)) else math.nan for c in COEFFS]
                prof_rows.append((dtc, p.t_center, site, *vals))
            bm = bulk_median(p, plan.margin)
            series.append((p.t_center, bm))
            bulk_rows.append((dtc, p.t_center, *(bm[c] for c in COEFFS)))
        summary["bulk"][dtc] = series
        avg = time_average(series, plan.t0, plan.t1)
        summary["sweep"][dtc] = avg
        sweep_rows.append((dtc, *(avg[c] for c in COEFFS)))
    units = "dt_cg and t_center in 1/J; c2 in J^2; gamma, nu, dz in J; d = c2/gamma"
    w.csv("hydro_profile.csv", ("dt_cg", "t_center", "site", *COEFFS), prof_rows, units)
    w.csv("hydro_bulk.csv", ("dt_cg", "t_center", *COEFFS), bulk_rows, units)
    w.csv("cg_sweep.csv", ("dt_cg", *COEFFS), sweep_rows, units)
    return _finish(plan, w, seeds, info, summary)


def run_sweep(plan: ExperimentPlan, out_dir, threads: int = 1) -> RunResult:
    return run_hydro(plan, out_dir, threads)


RUNNERS = {
    "validate": run_validate,
    "quench": run_quench,
    "hydro": run_hydro,
    "sweep": run_sweep,
}


def run_experiment(plan: ExperimentPlan, out_dir=None, threads: int = 1) -> RunResult:
    out = Path(out_dir if out_dir is not None else plan.out_dir)
    return RUNNERS[plan.kind](plan, out, max(1, int(threads)))


def _finish(plan: ExperimentPlan, w: _Writer, seeds: list[int], info: dict,
            summary: dict) -> RunResult:
    warnings = [info["warning"]] if "warning" in info else []
    content = {
        "version": __version__,
        "kind": plan.kind,
        "plan": plan_sections(plan),
        "config_sha256": w.config_hash,
        "seeds": [str(s) for s in seeds],
        "seed_mixing": "numpy SeedSequence(base_seed, spawn_key=(member,)) first uint64",
        "samples_per_window": plan.samples_per_window(),
        "warnings": warnings,
    }
    if "switch_step" in info:
        content["switch_step"] = info["switch_step"]
        content["t_q_effective"] = info["t_q_effective"]
    manifest = write_manifest(w.out_dir, content, w.files)
    return RunResult(w.out_dir, [*w.files, manifest], warnings, summary)
