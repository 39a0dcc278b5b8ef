"""Brute-force dense-matrix cross-checks of the fast code paths.

Each oracle compares a production routine against an independent dense
computation (``numpy.linalg.eigh``, explicit Kronecker products, explicit
matrix commutators, ``scipy.linalg.expm``) and reports the worst deviation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .dictionary import current_op, dict_full_pauli, dict_hydro
from .gedmd import SnapshotBlock, fit_liouvillian
from .hamiltonian import ChainSpec, build_hamiltonian
from .pauli import ExprBank, FullPauliBank, ObservableExpr, PauliString, commutator
from .propagator import EvolutionSchedule, Propagator, random_state, run_trajectory

TOLERANCES = {
    "propagator_vs_eigh": 1e-10,
    "expectation_vs_dense": 1e-12,
    "full_basis_vs_dense": 1e-12,
    "commutator_vs_dense": 1e-12,
    "derivative_vs_dense": 1e-12,
    "continuity_identity": 1e-12,
    "generator_recovery": 1e-8,
}


@dataclass
class OracleResult:
    name: str
    n_sites: int
    max_dev: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.max_dev) and self.max_dev < self.tol)


def _dense(expr: ObservableExpr) -> np.ndarray:
    """Independent dense build from single-site matrices (site 0 = last factor)."""
    single = {
        "I": np.eye(2, dtype=complex),
        "X": np.array([[0, 1], [1, 0]], dtype=complex),
        "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
        "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    }
    n = expr.n_sites
    out = np.zeros((1 << n, 1 << n), dtype=complex)
    for c, w in expr.terms:
        m = np.ones((1, 1), dtype=complex)
        for site in reversed(range(n)):
            m = np.kron(m, single[w.letter(site)])
        out += c * m
    return out


def oracle_propagator(spec: ChainSpec, seed: int, t: float = 0.5, n_steps: int = 25) -> float:
    h = build_hamiltonian(spec)
    w, v = np.linalg.eigh(_dense(h))
    psi0 = random_state(spec.n_sites, seed)
    prop = Propagator(h)
    psi = psi0.copy()
    worst = 0.0
    dt = t / n_steps
    for k in range(1, n_steps + 1):
        psi = prop.step(psi, dt)
        ref = v @ (np.exp(-1j * w * k * dt) * (v.conj().T @ psi0))
        worst = max(worst, float(np.max(np.abs(psi - ref))))
    return worst


def oracle_expectations(spec: ChainSpec, seed: int) -> tuple[float, float]:
    """Worst ``|<O> - <O>_dense|`` and ``|i<[H,O]> - dense|`` over the hydro set."""
    n = spec.n_sites
    h = build_hamiltonian(spec)
    exprs = dict_hydro(n).entries if n >= 3 else [
        ObservableExpr.word(PauliString.from_sites(n, {0: "Z"}))]
    bank = ExprBank(exprs)
    psi = random_state(n, seed)
    hpsi = _dense(h) @ psi
    got_x = bank.expectations(psi[None])[0]
    got_d = bank.derivatives(psi[None], hpsi[None])[0]
    dev_x = dev_d = 0.0
    hd = _dense(h)
    for k, e in enumerate(exprs):
        od = _dense(e)
        ref_x = np.vdot(psi, od @ psi).real
        ref_d = (1j * np.vdot(psi, (hd @ od - od @ hd) @ psi)).real
        dev_x = max(dev_x, abs(got_x[k] - ref_x))
        dev_d = max(dev_d, abs(got_d[k] - ref_d))
    return dev_x, dev_d


def oracle_full_basis(n_sites: int, seed: int) -> float:
    d = dict_full_pauli(n_sites)
    bank = FullPauliBank(n_sites)
    psi = random_state(n_sites, seed)
    got = bank.expectations(psi[None])[0]
    ref = np.array([np.vdot(psi, _dense(e) @ psi).real for e in d.entries])
    return float(np.max(np.abs(got - ref)))


def oracle_commutator(spec: ChainSpec) -> float:
    """``commutator(H, O)`` against the dense ``i (H O - O H)``."""
    n = spec.n_sites
    h = build_hamiltonian(spec)
    hd = _dense(h)
    worst = 0.0
    ops = [current_op(n, i) for i in range(n - 1)]
    ops += [ObservableExpr.word(PauliString.from_sites(n, {i: "Z"})) for i in range(n)]
    for o in ops:
        od = _dense(o)
        worst = max(worst, float(np.max(np.abs(_dense(commutator(h, o)) - 1j * (hd @ od - od @ hd)))))
    return worst


def oracle_continuity(spec: ChainSpec) -> float:
    """Dense ``i[H, Z_i]`` against ``2J (J_{i-1} - J_i)`` (missing bonds contribute 0)."""
    n = spec.n_sites
    hd = _dense(build_hamiltonian(spec))
    cur = [_dense(current_op(n, i)) for i in range(n - 1)]
    zero = np.zeros_like(hd)
    worst = 0.0
    for i in range(n):
        z = _dense(ObservableExpr.word(PauliString.from_sites(n, {i: "Z"})))
        lhs = 1j * (hd @ z - z @ hd)
        left = cur[i - 1] if i >= 1 else zero
        right = cur[i] if i <= n - 2 else zero
        rhs = 2 * spec.j * (left - right)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def oracle_generator_recovery(dim: int = 6, seed: int = 0, n_traj: int = 4,
                              n_samples: int = 40, dt: float = 0.05) -> float:
    """Fit a random generator from exact linear-flow data; worst entry error."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((dim, dim)) / np.sqrt(dim)
    xs, xds = [], []
    for _ in range(n_traj):
        x0 = rng.standard_normal(dim)
        for k in range(n_samples):
            x = sla.expm(a * k * dt) @ x0
            xs.append(x)
            xds.append(a @ x)
    x = np.array(xs).T
    xd = np.array(xds).T
    m = x.shape[1]
    block = SnapshotBlock(x, xd, 0.0, np.zeros(m), np.zeros(m, dtype=int))
    est = fit_liouvillian(block)
    return float(np.max(np.abs(est.dense() - a)))


def oracle_trajectory_derivative(spec: ChainSpec, seed: int) -> float:
    """Recorded exact derivatives along a short run against dense commutators."""
    n = spec.n_sites
    if n < 3:
        return 0.0
    h = build_hamiltonian(spec)
    d = dict_hydro(n)
    sched = EvolutionSchedule(0.01, 5, 1)
    psi0 = random_state(n, seed)
    rec = run_trajectory(psi0, h, sched, d, "exact")
    hd = _dense(h)
    w, v = np.linalg.eigh(hd)
    worst = 0.0
    for k, t in enumerate(rec.times):
        psi = v @ (np.exp(-1j * w * t) * (v.conj().T @ psi0))
        for r, e in enumerate(d.entries):
            od = _dense(e)
            ref = (1j * np.vdot(psi, (hd @ od - od @ hd) @ psi)).real
            worst = max(worst, abs(rec.xdot[k, r] - ref))
    return worst


def run_oracle_suite(max_n: int = 5, spec: ChainSpec | None = None,
                     seed: int = 0) -> list[OracleResult]:
    """Run every oracle for chain sizes ``2..max_n`` (failures are report rows)."""
    base = spec or ChainSpec(max(2, max_n))
    out: list[OracleResult] = []

    def add(name, n, fn):
        try:
            dev = float(fn())
        except Exception:
            dev = float("inf")
        out.append(OracleResult(name, n, dev, TOLERANCES[name]))

    for n in range(2, max_n + 1):
        s = ChainSpec(n, base.j, base.delta, base.j2)
        add("propagator_vs_eigh", n, lambda: oracle_propagator(s, seed + n))
        devs = {}

        def expect(which, s=s, n=n):
            if not devs:
                devs["x"], devs["d"] = oracle_expectations(s, seed + 100 + n)
            return devs[which]

        add("expectation_vs_dense", n, lambda: expect("x"))
        add("derivative_vs_dense", n, lambda: max(expect("d"),
                                                   oracle_trajectory_derivative(s, seed + 200 + n)))
        if n <= 4:
            add("full_basis_vs_dense", n, lambda: oracle_full_basis(n, seed + 300 + n))
        add("commutator_vs_dense", n, lambda: oracle_commutator(s))
        add("continuity_identity", n, lambda: oracle_continuity(s))
    add("generator_recovery", 6, lambda: oracle_generator_recovery(6, seed))
    return out
