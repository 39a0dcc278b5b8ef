"""Windowed least-squares identification of an effective generator ``L``.

Given snapshot columns ``x_m`` and derivative columns ``xdot_m`` the fit is
``L = xdot @ pinv(x)`` with a truncated SVD pseudo-inverse.  ``L`` is kept in
factored form ``L = A @ U.T`` where ``U`` holds the retained left singular
vectors of ``x`` and ``A = xdot @ V / s``.  When there are more observables
than samples the ``n_obs x n_obs`` matrix is never formed; spectra and
propagation then run on the ``r x r`` matrix ``U.T @ A``, which shares the
non-zero eigenvalues of ``L``.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import ConfigError, DegenerateDataError, NumericalIntegrityError
from .propagator import TrajectoryRecord

RCOND = 1e-10
EIGVEC_COND_MAX = 1e12


@dataclass(frozen=True)
class WindowSpec:
    duration: float = 0.6
    stride: float = 0.1
    deriv_mode: str = "exact"
    dt_cg: float = 0.0

    def __post_init__(self):
        if self.duration <= 0 or self.stride <= 0:
            raise ValueError("window duration and stride must be > 0")
        if self.deriv_mode not in ("exact", "finite"):
            raise ValueError(f"unknown deriv_mode {self.deriv_mode!r}")
        if self.deriv_mode == "finite" and not 0 < self.dt_cg < self.duration:
            raise ValueError("finite mode needs 0 < dt_cg < duration")

    def finite(self, dt_cg: float) -> WindowSpec:
        if dt_cg == 0:
            return WindowSpec(self.duration, self.stride, "exact", 0.0)
        return WindowSpec(self.duration, self.stride, "finite", dt_cg)

    def n_samples(self, dt: float) -> int:
        return steps_of(self.duration, dt, "window duration")

    def lag_steps(self, dt: float) -> int:
        return steps_of(self.dt_cg, dt, "dt_cg") if self.deriv_mode == "finite" else 0


def steps_of(value: float, dt: float, what: str = "value") -> int:
    """``value / dt`` as an integer; raises when ``value`` is off the grid."""
    k = round(value / dt)
    if k < 0 or abs(k * dt - value) > 1e-9 * max(1.0, abs(value)):
        raise ConfigError(f"{what}={value!r} is not an integer multiple of dt={dt!r}")
    return int(k)


@dataclass
class SnapshotBlock:
    """``x`` and ``xdot`` are ``(n_obs, m_samples)``; members are concatenated in order."""

    x: np.ndarray
    xdot: np.ndarray
    t_center: float
    sample_times: np.ndarray
    ensemble_ids: np.ndarray

    def __post_init__(self):
        if self.x.shape != self.xdot.shape:
            raise ValueError("x and xdot must share a shape")

    @property
    def n_obs(self) -> int:
        return self.x.shape[0]

    @property
    def m_samples(self) -> int:
        return self.x.shape[1]


@dataclass
class LiouvillianEstimate:
    """Fitted generator in factored form ``L = a @ u.T``."""

    a: np.ndarray
    u: np.ndarray
    rank: int
    sv_kept: np.ndarray
    sv_dropped: np.ndarray
    residual_rms: float
    t_center: float
    m_samples: int
    l: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_obs(self) -> int:
        return self.u.shape[0]

    @property
    def reduced(self) -> np.ndarray:
        """``U.T @ A``: the generator compressed onto the retained data subspace."""
        return self.u.T @ self.a

    @property
    def economy(self) -> bool:
        return self.l is None

    def dense(self) -> np.ndarray:
        if self.l is not None:
            return self.l
        return self.a @ self.u.T


def window_start(t_center: float, duration: float, dt: float) -> int:
    return steps_of(t_center - duration / 2, dt, "window start")


def window_centers(duration: float, stride: float, t_end: float, dt: float,
                   t_lo: float | None = None, t_hi: float | None = None) -> list[float]:
    """Centres ``duration/2 + k*stride`` whose windows fit inside ``[0, t_end]``."""
    n_win = steps_of(duration, dt, "window duration")
    last = round(t_end / dt)
    stride_steps = steps_of(stride, dt, "window stride")
    centers = []
    start = 0
    while start + n_win - 1 <= last:
        c = float(np.round(start * dt + duration / 2, 12))
        if (t_lo is None or c >= t_lo - 1e-9) and (t_hi is None or c <= t_hi + 1e-9):
            centers.append(c)
        start += stride_steps
    return centers


def assemble_block(records: Sequence[TrajectoryRecord], window: WindowSpec,
                   t_center: float) -> SnapshotBlock:
    """Gather the window's samples from every ensemble member into one block.

    Exact mode pairs each expectation column with its commutator derivative.
    Finite mode uses forward differences ``(X(t+dt_cg) - X(t)) / dt_cg`` paired
    with ``X(t)``, keeping only samples whose partner lies inside the window.
    """
    if not records:
        raise ValueError("no trajectory records")
    times = records[0].times
    dt = float(times[1] - times[0]) if len(times) > 1 else window.duration
    n_win = window.n_samples(dt)
    lag = window.lag_steps(dt)
    start = window_start(t_center, window.duration, dt)
    stop = start + n_win
    if start < 0 or stop > len(times):
        raise ValueError(
            f"window centred at {t_center} needs samples [{start}, {stop}) "
            f"but records hold {len(times)}"
        )
    xs, xds, ids, ts = [], [], [], []
    for k, rec in enumerate(records):
        if len(rec.times) != len(times):
            raise ValueError("ensemble records have different lengths")
        if window.deriv_mode == "exact":
            if rec.xdot is None:
                raise ValueError("exact mode needs recorded derivatives")
            x = rec.x[start:stop]
            xd = rec.xdot[start:stop]
            t = rec.times[start:stop]
        else:
            x = rec.x[start:stop - lag]
            xd = (rec.x[start + lag:stop] - x) / (lag * dt)
            t = rec.times[start:stop - lag]
        xs.append(x)
        xds.append(xd)
        ts.append(t)
        ids.append(np.full(len(t), k))
    return SnapshotBlock(
        x=np.concatenate(xs).T.copy(),
        xdot=np.concatenate(xds).T.copy(),
        t_center=t_center,
        sample_times=np.concatenate(ts),
        ensemble_ids=np.concatenate(ids),
    )


def fit_liouvillian(block: SnapshotBlock, rcond: float = RCOND) -> LiouvillianEstimate:
    """Least-squares generator ``L = xdot @ pinv(x)`` with truncated SVD."""
    x, xdot = block.x, block.xdot
    if x.size == 0:
        raise DegenerateDataError("empty snapshot block")
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    if s[0] == 0:
        raise DegenerateDataError("snapshot matrix is identically zero")
    r = int(np.count_nonzero(s > rcond * s[0]))
    if r == 0:
        raise DegenerateDataError("all singular values below the cutoff")
    u_r = u[:, :r]
    a = (xdot @ vt[:r].T) / s[:r]
    # L x = A U^T x = A S V^T = xdot V V^T
    resid = xdot - a @ (s[:r, None] * vt[:r])
    est = LiouvillianEstimate(
        a=a,
        u=u_r,
        rank=r,
        sv_kept=s[:r].copy(),
        sv_dropped=s[r:].copy(),
        residual_rms=float(np.sqrt(np.mean(resid ** 2))),
        t_center=block.t_center,
        m_samples=block.m_samples,
    )
    if block.n_obs <= block.m_samples:
        est.l = a @ u_r.T
    return est


def spectrum(est: LiouvillianEstimate) -> np.ndarray:
    """Eigenvalues of ``L`` on its retained subspace (``rank`` values).

    The remaining ``n_obs - rank`` eigenvalues are exactly zero and are not
    included; see :func:`n_null_eigenvalues`.
    """
    try:
        return np.linalg.eigvals(est.reduced)
    except np.linalg.LinAlgError as exc:
        raise NumericalIntegrityError(f"eigensolver failed: {exc}") from exc


def n_null_eigenvalues(est: LiouvillianEstimate) -> int:
    return est.n_obs - est.rank


def liouvillian_trace(est: LiouvillianEstimate) -> float:
    return float(np.trace(est.reduced))


def max_dissipation_pole(est: LiouvillianEstimate) -> float:
    return float(np.max(np.abs(spectrum(est).real)))


def _phi1(z: np.ndarray) -> np.ndarray:
    """``(exp(z) - 1) / z`` with the removable singularity handled."""
    z = np.asarray(z, dtype=complex)
    out = np.ones_like(z)
    small = np.abs(z) < 1e-5
    zs = z[small]
    out[small] = 1 + zs / 2 + zs * zs / 6 + zs ** 3 / 24
    zb = z[~small]
    out[~small] = np.expm1(zb) / zb
    return out


def reconstruct(est: LiouvillianEstimate, x0: np.ndarray, times: Sequence[float],
                rows: Sequence[int] | None = None, method: str = "auto") -> np.ndarray:
    """Predicted observables ``exp(L t) x0`` for each time, shape ``(len(times), n_rows)``.

    With ``L = A U^T`` the propagator acts as
    ``exp(Lt) x0 = x0 + t A phi1(t U^T A) U^T x0``, so only ``r x r`` work is
    needed.  ``method`` is ``"eig"``, ``"expm"`` or ``"auto"`` (eigenvectors
    when their condition number is below 1e12, dense exponential otherwise).
    """
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0):
        raise ValueError("times must be sorted")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (est.n_obs,):
        raise ValueError(f"x0 must have length {est.n_obs}")
    rows = np.arange(est.n_obs) if rows is None else np.asarray(rows)
    red = est.reduced
    y = est.u.T @ x0
    a_rows = est.a[rows]
    if method == "auto":
        w, vecs = np.linalg.eig(red)
        method = "eig" if np.linalg.cond(vecs) < EIGVEC_COND_MAX else "expm"
    out = np.empty((len(times), len(rows)))
    if method == "eig":
        w, vecs = np.linalg.eig(red)
        coef = np.linalg.solve(vecs, y)
        left = a_rows @ vecs
        for k, t in enumerate(times):
            out[k] = x0[rows] + (t * (left @ (_phi1(w * t) * coef))).real
    elif method == "expm":
        r = red.shape[0]
        aug = np.zeros((r + 1, r + 1))
        aug[:r, :r] = red
        aug[:r, r] = y
        for k, t in enumerate(times):
            # top-right block of expm(t*[[B, y], [0, 0]]) is t*phi1(tB) y
            g = sla.expm(t * aug)[:r, r]
            out[k] = x0[rows] + a_rows @ g
    else:
        raise ValueError(f"unknown method {method!r}")
    return out
