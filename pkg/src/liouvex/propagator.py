"""Exact unitary evolution of state vectors.

``exp(-iH dt)|psi>`` is applied with a scaled, truncated Taylor series: the
step is cut into ``s`` substeps with ``s * theta >= ||H||_1 |dt|`` and each
substep sums terms until two consecutive terms fall below ``tol`` relative to
the partial sum.  The number of terms per substep is capped; hitting the cap
raises :class:`~liouvex.errors.PropagationError`.
"""

from __future__ import annotations

import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .errors import NumericalIntegrityError, PropagationError
from .pauli import ExprBank, FullPauliBank, ObservableExpr

TAYLOR_TOL = 1e-12
MAX_TERMS = 40
NORM_DRIFT_TOL = 1e-10
_THETA = 1.0


@dataclass(frozen=True)
class EvolutionSchedule:
    dt: float = 0.002
    n_steps: int = 0
    record_every: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.n_steps < 0:
            raise ValueError("n_steps must be >= 0")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")

    @property
    def record_steps(self) -> np.ndarray:
        return np.arange(0, self.n_steps + 1, self.record_every)

    @property
    def record_dt(self) -> float:
        return self.dt * self.record_every


@dataclass
class TrajectoryRecord:
    """Expectation (and optionally exact-derivative) rows at the recorded times.

    ``x`` and ``xdot`` have shape ``(n_times, n_obs)``.
    """

    times: np.ndarray
    x: np.ndarray
    xdot: np.ndarray | None = None
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.x.shape[0] != len(self.times):
            raise ValueError("x rows must match times")
        if self.xdot is not None and self.xdot.shape != self.x.shape:
            raise ValueError("xdot must have the shape of x")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")


def random_state(n_sites: int, seed: int) -> np.ndarray:
    """Normalized vector with iid standard-normal real and imaginary parts."""
    if n_sites < 1:
        raise ValueError("n_sites must be >= 1")
    rng = np.random.default_rng(seed)
    dim = 1 << n_sites
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return psi / np.linalg.norm(psi)


class Propagator:
    """Caches the sparse form and 1-norm of a Hamiltonian for repeated steps."""

    def __init__(self, h: ObservableExpr, tol: float = TAYLOR_TOL, max_terms: int = MAX_TERMS):
        self.h = h
        self.matrix = h.to_sparse()
        self.norm1 = float(spla.norm(self.matrix, 1)) if self.matrix.nnz else 0.0
        self.tol = tol
        self.max_terms = max_terms

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return self.matrix @ psi

    def step(self, psi: np.ndarray, dt: float) -> np.ndarray:
        if dt == 0 or self.norm1 == 0:
            return psi.copy()
        n_sub = max(1, math.ceil(self.norm1 * abs(dt) / _THETA))
        h = dt / n_sub
        out = psi.astype(complex, copy=True)
        for _ in range(n_sub):
            out = self._taylor(out, h)
        return out

    def _taylor(self, psi: np.ndarray, h: float) -> np.ndarray:
        acc = psi.copy()
        term = psi
        prev = np.inf
        for k in range(1, self.max_terms + 1):
            term = (-1j * h / k) * (self.matrix @ term)
            acc += term
            cur = np.linalg.norm(term)
            if cur + prev <= self.tol * np.linalg.norm(acc):
                return acc
            prev = cur
        raise PropagationError(
            f"Taylor series did not converge in {self.max_terms} terms "
            f"(|h|={abs(h):.3e}, ||H||_1={self.norm1:.3e}, last term {prev:.3e})"
        )


def evolve(psi: np.ndarray, h: ObservableExpr | Propagator, dt: float) -> np.ndarray:
    """``exp(-i H dt) psi``; raises if the norm drifts by more than 1e-10."""
    prop = h if isinstance(h, Propagator) else Propagator(h)
    before = np.linalg.norm(psi)
    out = prop.step(psi, dt)
    drift = abs(np.linalg.norm(out) - before)
    if drift > NORM_DRIFT_TOL:
        raise NumericalIntegrityError(f"norm drift {drift:.3e} after one step")
    return out


def evolve_path(
    psi0: np.ndarray,
    h: ObservableExpr | Propagator,
    sched: EvolutionSchedule,
    h_after: ObservableExpr | Propagator | None = None,
    switch_step: int | None = None,
) -> Iterator[tuple[int, np.ndarray, Propagator]]:
    """Yield ``(step, psi, active_propagator)`` at every recorded step.

    With ``h_after`` the generator switches from ``h`` to ``h_after`` at
    ``switch_step``: the step leaving ``switch_step`` and all later ones use
    ``h_after``, and so does the derivative recorded at ``switch_step``.
    """
    prop = h if isinstance(h, Propagator) else Propagator(h)
    prop_after = None
    if h_after is not None:
        prop_after = h_after if isinstance(h_after, Propagator) else Propagator(h_after)
        if switch_step is None:
            raise ValueError("switch_step required with h_after")

    def active(step):
        if prop_after is not None and step >= switch_step:
            return prop_after
        return prop

    norm0 = np.linalg.norm(psi0)
    if abs(norm0 - 1.0) > NORM_DRIFT_TOL:
        raise NumericalIntegrityError(f"initial state not normalized (|psi|={norm0:.12f})")
    psi = psi0.astype(complex, copy=True)
    for step in range(sched.n_steps + 1):
        if step % sched.record_every == 0:
            yield step, psi, active(step)
        if step == sched.n_steps:
            break
        psi = active(step).step(psi, sched.dt)
        drift = abs(np.linalg.norm(psi) - 1.0)
        if drift > NORM_DRIFT_TOL:
            raise NumericalIntegrityError(f"norm drift {drift:.3e} at step {step + 1}")


def make_bank(exprs_or_dictionary) -> ExprBank | FullPauliBank:
    """Evaluator for a dictionary (full Pauli bases get the Walsh-Hadamard path)."""
    evaluator = getattr(exprs_or_dictionary, "evaluator", None)
    if evaluator is not None:
        return evaluator()
    return ExprBank(list(exprs_or_dictionary))


def run_trajectory(
    psi0: np.ndarray,
    h: ObservableExpr | Propagator,
    sched: EvolutionSchedule,
    dictionary,
    deriv_mode: str = "exact",
    h_after: ObservableExpr | Propagator | None = None,
    switch_step: int | None = None,
    chunk: int = 64,
) -> TrajectoryRecord | list[TrajectoryRecord]:
    """Evolve ``psi0`` and record dictionary expectations every ``record_every`` steps.

    ``deriv_mode="exact"`` also records commutator derivatives ``i<[H, O]>`` at
    the same instants; ``"finite"`` records expectations only.  Passing a list
    of dictionaries evaluates all of them on one trajectory and returns a list.
    """
    if deriv_mode not in ("exact", "finite"):
        raise ValueError(f"unknown deriv_mode {deriv_mode!r}")
    many = isinstance(dictionary, (list, tuple))
    dicts: Sequence = dictionary if many else [dictionary]
    banks = [make_bank(d) for d in dicts]
    steps = sched.record_steps
    xs = [np.empty((len(steps), b.n_exprs)) for b in banks]
    xds = [np.empty((len(steps), b.n_exprs)) for b in banks] if deriv_mode == "exact" else None

    buf_psi, buf_hpsi, buf_rows = [], [], []

    def flush():
        if not buf_rows:
            return
        states = np.array(buf_psi)
        rows = np.array(buf_rows)
        hstates = np.array(buf_hpsi) if xds is not None else None
        for k, bank in enumerate(banks):
            xs[k][rows] = bank.expectations(states)
            if xds is not None:
                xds[k][rows] = bank.derivatives(states, hstates)
        buf_psi.clear()
        buf_hpsi.clear()
        buf_rows.clear()

    for row, (_, psi, prop) in enumerate(evolve_path(psi0, h, sched, h_after, switch_step)):
        buf_psi.append(psi)
        if xds is not None:
            buf_hpsi.append(prop.apply(psi))
        buf_rows.append(row)
        if len(buf_rows) == chunk:
            flush()
    flush()

    times = steps * sched.dt
    recs = [
        TrajectoryRecord(times, xs[k], None if xds is None else xds[k])
        for k in range(len(banks))
    ]
    return recs if many else recs[0]
