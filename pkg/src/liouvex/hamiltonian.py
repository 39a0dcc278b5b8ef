"""Chaotic XXZ chain with next-nearest-neighbour ZZ coupling, and quench pairs."""

from __future__ import annotations

from dataclasses import dataclass

from .pauli import ObservableExpr, PauliString


@dataclass(frozen=True)
class ChainSpec:
    """Open chain of ``n_sites`` spins; sites are 0-based."""

    n_sites: int
    j: float = 1.0
    delta: float = 1.0
    j2: float = 0.5

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError(f"n_sites must be >= 2, got {self.n_sites}")


@dataclass(frozen=True)
class QuenchSpec:
    """Partition after site ``cut_after_site``; coupling switched on at ``t_q``."""

    cut_after_site: int
    t_q: float

    def validate(self, chain: ChainSpec) -> None:
        if not 0 <= self.cut_after_site < chain.n_sites - 1:
            raise ValueError(
                f"cut_after_site must lie in [0, {chain.n_sites - 2}], "
                f"got {self.cut_after_site}"
            )
        if self.t_q < 0:
            raise ValueError("t_q must be >= 0")


def _pair(n: int, a: str, i: int, b: str, k: int) -> PauliString:
    return PauliString.from_sites(n, {i: a, k: b})


def build_hamiltonian(spec: ChainSpec) -> ObservableExpr:
    """``sum_i J(XX + YY) + Delta ZZ`` on bonds ``(i, i+1)`` plus ``J2 ZZ`` on ``(i, i+2)``.

    Terms are ordered bond by bond (XX, YY, ZZ), followed by the NNN block.
    """
    n = spec.n_sites
    terms = []
    for i in range(n - 1):
        terms.append((spec.j, _pair(n, "X", i, "X", i + 1)))
        terms.append((spec.j, _pair(n, "Y", i, "Y", i + 1)))
        terms.append((spec.delta, _pair(n, "Z", i, "Z", i + 1)))
    for i in range(n - 2):
        terms.append((spec.j2, _pair(n, "Z", i, "Z", i + 2)))
    return ObservableExpr(terms, name="H", role="energy", n_sites=n)


def straddles(word: PauliString, cut_after_site: int) -> bool:
    """True when the word has support on both sides of the cut."""
    sup = word.support
    return bool(sup) and sup[0] <= cut_after_site < sup[-1]


def build_quench_pair(spec: ChainSpec, q: QuenchSpec) -> tuple[ObservableExpr, ObservableExpr]:
    """Return ``(h_iso, h_coupled)``; their difference is the cut-bridging interaction."""
    q.validate(spec)
    h_coupled = build_hamiltonian(spec)
    h_iso = h_coupled.filter(lambda w: not straddles(w, q.cut_after_site)).renamed("H_iso")
    return h_iso, h_coupled.renamed("H_coupled")


def interaction(spec: ChainSpec, q: QuenchSpec) -> ObservableExpr:
    """The terms switched on at the quench (``h_coupled - h_iso``)."""
    q.validate(spec)
    return build_hamiltonian(spec).filter(
        lambda w: straddles(w, q.cut_after_site)
    ).renamed("V_int")


def restrict_to_range(h: ObservableExpr, lo: int, hi: int, name: str = "") -> ObservableExpr:
    """Words of ``h`` fully supported on sites ``lo..hi`` (inclusive)."""
    return h.filter(
        lambda w: bool(w.support) and lo <= w.support[0] and w.support[-1] <= hi
    ).renamed(name or f"H[{lo}:{hi}]", role="energy")
