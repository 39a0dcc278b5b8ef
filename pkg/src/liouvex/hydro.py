"""Hydrodynamic coefficients read off the current rows of a fitted generator.

For current index ``k`` (the bond between sites ``k`` and ``k+1``)::

    c2[k]    = (L[J_k, Z_k] - L[J_k, Z_{k+1}]) / 2
    gamma[k] = -L[J_k, J_k]
    nu[k]    = (L[J_k, J_{k-1}] + L[J_k, J_{k+1}]) / 2      (1 <= k <= n-3)
    d[k]     = c2[k] / gamma[k]                              (NaN if |gamma| < 1e-12)
    dz[i]    = -L[Z_i, Z_i] / 2
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .dictionary import Dictionary
from .gedmd import (
    RCOND,
    LiouvillianEstimate,
    WindowSpec,
    assemble_block,
    fit_liouvillian,
)
from .propagator import TrajectoryRecord

GAMMA_FLOOR = 1e-12
COEFFS = ("c2", "gamma", "nu", "d", "dz")


@dataclass
class HydroProfile:
    t_center: float
    c2: np.ndarray
    gamma: np.ndarray
    nu: np.ndarray
    d: np.ndarray
    dz: np.ndarray

    @property
    def n_sites(self) -> int:
        return len(self.dz)

    def get(self, name: str) -> np.ndarray:
        return getattr(self, name)


@dataclass
class CoarseGrainSweep:
    dt_cg: np.ndarray
    values: dict[str, np.ndarray]
    t0: float
    t1: float

    def row(self, i: int) -> dict[str, float]:
        return {k: float(v[i]) for k, v in self.values.items()}


def extract_coefficients(est: LiouvillianEstimate | np.ndarray,
                         layout: Dictionary | dict) -> HydroProfile:
    """Per-site coefficients from the density and current rows of ``L``."""
    lmat = est if isinstance(est, np.ndarray) else est.dense()
    t_center = float("nan") if isinstance(est, np.ndarray) else est.t_center
    lay = layout.layout if isinstance(layout, Dictionary) else layout
    n = 1 + max((s for (k, s) in lay if k == "density"), default=-1)
    if n < 2 or not all(("current", k) in lay for k in range(n - 1)):
        raise KeyError("layout must expose density rows 0..n-1 and current rows 0..n-2")
    zr = [lay[("density", i)] for i in range(n)]
    jr = [lay[("current", k)] for k in range(n - 1)]
    c2 = np.array([(lmat[jr[k], zr[k]] - lmat[jr[k], zr[k + 1]]) / 2 for k in range(n - 1)])
    gamma = np.array([-lmat[jr[k], jr[k]] for k in range(n - 1)])
    nu = np.full(n - 1, np.nan)
    for k in range(1, n - 2):
        nu[k] = (lmat[jr[k], jr[k - 1]] + lmat[jr[k], jr[k + 1]]) / 2
    d = np.full(n - 1, np.nan)
    ok = np.abs(gamma) >= GAMMA_FLOOR
    d[ok] = c2[ok] / gamma[ok]
    dz = np.array([-lmat[zr[i], zr[i]] / 2 for i in range(n)])
    return HydroProfile(t_center, c2, gamma, nu, d, dz)


def bulk_indices(n_sites: int, margin: int) -> np.ndarray:
    """Sites (and current indices) ``margin .. n-1-margin``."""
    idx = np.arange(margin, n_sites - margin)
    if margin < 0 or idx.size == 0:
        raise ValueError(f"margin {margin} leaves no bulk in a chain of {n_sites}")
    return idx


def bulk_median(profile: HydroProfile, margin: int = 2, stat=np.nanmedian) -> dict[str, float]:
    """Spatial median of each coefficient over the bulk (edges trimmed by ``margin``)."""
    idx = bulk_indices(profile.n_sites, margin)
    out = {}
    for name in COEFFS:
        arr = profile.get(name)
        vals = arr[idx[idx < len(arr)]]
        vals = vals[~np.isnan(vals)]
        out[name] = float(stat(vals)) if vals.size else float("nan")
    return out


def bulk_mean(profile: HydroProfile, margin: int = 2) -> dict[str, float]:
    return bulk_median(profile, margin, stat=np.mean)


def time_average(series: Sequence[tuple[float, dict[str, float]]], t0: float,
                 t1: float) -> dict[str, float]:
    """Mean of each coefficient over entries with ``t0 <= t_center <= t1``."""
    picked = [vals for t, vals in series if t0 - 1e-9 <= t <= t1 + 1e-9]
    if not picked:
        raise ValueError(f"no windows with centre in [{t0}, {t1}]")
    out = {}
    for name in picked[0]:
        arr = np.array([p[name] for p in picked], dtype=float)
        arr = arr[~np.isnan(arr)]
        out[name] = float(arr.mean()) if arr.size else float("nan")
    return out


def profiles_for(records: Sequence[TrajectoryRecord], dictionary: Dictionary,
                 window: WindowSpec, centers: Sequence[float],
                 rcond: float = RCOND) -> list[HydroProfile]:
    return [
        extract_coefficients(fit_liouvillian(assemble_block(records, window, c), rcond),
                             dictionary)
        for c in centers
    ]


def sweep_coarse_graining(records: Sequence[TrajectoryRecord], dictionary: Dictionary,
                          window: WindowSpec, dt_cgs: Sequence[float],
                          centers: Sequence[float], t0: float, t1: float,
                          margin: int = 2, rcond: float = RCOND) -> CoarseGrainSweep:
    """Time-averaged bulk medians for each coarse-graining interval.

    ``dt_cg = 0`` selects exact derivatives; other values refit in finite mode.
    """
    inside = [c for c in centers if t0 - 1e-9 <= c <= t1 + 1e-9]
    values = {name: np.empty(len(dt_cgs)) for name in COEFFS}
    for i, dtc in enumerate(dt_cgs):
        profs = profiles_for(records, dictionary, window.finite(dtc), inside, rcond)
        avg = time_average([(p.t_center, bulk_median(p, margin)) for p in profs], t0, t1)
        for name in COEFFS:
            values[name][i] = avg[name]
    return CoarseGrainSweep(np.asarray(dt_cgs, dtype=float), values, t0, t1)
