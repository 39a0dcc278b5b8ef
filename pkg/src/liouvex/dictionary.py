"""Observable dictionaries and their row layouts.

Every builder is deterministic: entries are emitted block by block and, inside
a block, in increasing site order, so row indices are reproducible.  The
``layout`` maps ``(key, site)`` to a row; for the hydrodynamic dictionary the
keys are ``density``, ``current``, ``zz``, ``kinetic``, ``zzz``, ``jz``,
``zj`` and ``kz``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .hamiltonian import ChainSpec, build_hamiltonian, restrict_to_range
from .pauli import (
    ExprBank,
    FullPauliBank,
    ObservableExpr,
    PauliString,
    expr_product,
)

FULL_PAULI_CAP = 8


@dataclass
class Dictionary:
    entries: list[ObservableExpr]
    layout: dict[tuple[str, int], int]
    name: str
    kind: str = "generic"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if any(w.is_identity for w in e.words):
                raise ValueError(f"identity word in dictionary entry {e.name}")
            if len(e) == 0:
                raise ValueError(f"empty dictionary entry {e.name}")
            key = frozenset(e.as_dict().items())
            if key in seen:
                raise ValueError(f"duplicate dictionary entry {e.name}")
            seen.add(key)
        rows = list(self.layout.values())
        if len(set(rows)) != len(rows) or any(not 0 <= r < len(self.entries) for r in rows):
            raise ValueError("layout must be injective onto valid rows")

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    @property
    def n_sites(self) -> int:
        return self.entries[0].n_sites

    def row(self, key: str, site: int) -> int:
        try:
            return self.layout[(key, site)]
        except KeyError:
            raise KeyError(f"dictionary {self.name!r} has no ({key!r}, {site}) row") from None

    def has(self, key: str) -> bool:
        return any(k == key for k, _ in self.layout)

    def evaluator(self):
        if self.kind == "full_pauli":
            return FullPauliBank(self.n_sites)
        return ExprBank(self.entries)


def _word(n, letters, name, role):
    return ObservableExpr.word(PauliString.from_sites(n, letters), name=name, role=role)


def _check_range(n_sites: int, lo: int, hi: int) -> None:
    if not 0 <= lo <= hi < n_sites:
        raise ValueError(f"site range [{lo}, {hi}] invalid for {n_sites} sites")


def dict_full_pauli(n_sites: int, cap: int = FULL_PAULI_CAP) -> Dictionary:
    """All ``4**n - 1`` non-identity words, ordered by ``(z_mask, x_mask)``."""
    if n_sites > cap:
        raise ValueError(f"full Pauli dictionary capped at {cap} sites, got {n_sites}")
    dim = 1 << n_sites
    entries = []
    layout = {}
    for z in range(dim):
        for x in range(dim):
            if x == 0 and z == 0:
                continue
            w = PauliString(n_sites, x, z)
            layout[(w.label, 0)] = len(entries)
            entries.append(ObservableExpr([(1.0, w)], name=w.compact(), role="generic"))
    return Dictionary(entries, layout, name="full", kind="full_pauli")


def dict_macro_A(n_sites: int) -> Dictionary:
    """Densities ``Z_i`` followed by nearest-neighbour ``Z_i Z_{i+1}``."""
    if n_sites < 2:
        raise ValueError("Dict A needs at least 2 sites")
    n = n_sites
    entries, layout = [], {}
    for i in range(n):
        layout[("density", i)] = len(entries)
        entries.append(_word(n, {i: "Z"}, f"Z{i}", "density"))
    for i in range(n - 1):
        layout[("zz", i)] = len(entries)
        entries.append(_word(n, {i: "Z", i + 1: "Z"}, f"Z{i}Z{i + 1}", "correlation"))
    return Dictionary(entries, layout, name="A")


def dict_target_S(n_sites: int, site_range: tuple[int, int]) -> Dictionary:
    """Every non-identity word supported inside ``site_range`` (inclusive)."""
    lo, hi = site_range
    _check_range(n_sites, lo, hi)
    sites = list(range(lo, hi + 1))
    entries, layout = [], {}
    # z-major then x-major over the local masks, like the full basis
    width = len(sites)
    for zl, xl in itertools.product(range(1 << width), repeat=2):
        if zl == 0 and xl == 0:
            continue
        w = PauliString(n_sites, xl << lo, zl << lo)
        layout[(w.label[lo:hi + 1], lo)] = len(entries)
        role = "density" if len(w.support) == 1 else "correlation"
        entries.append(ObservableExpr([(1.0, w)], name=w.compact(), role=role))
    return Dictionary(entries, layout, name="S", meta={"range": (lo, hi)})


def dict_pointer_L(n_sites: int, site_range: tuple[int, int]) -> Dictionary:
    """``Z_i``, ``Z_i Z_{i+1}``, ``X_i Y_{i+1}``, ``Y_i X_{i+1}`` inside the range."""
    lo, hi = site_range
    _check_range(n_sites, lo, hi)
    if hi == lo:
        raise ValueError("Dict L needs at least two sites")
    n = n_sites
    entries, layout = [], {}
    for i in range(lo, hi + 1):
        layout[("density", i)] = len(entries)
        entries.append(_word(n, {i: "Z"}, f"Z{i}", "density"))
    blocks = (("zz", "Z", "Z", "correlation"), ("xy", "X", "Y", "current"),
              ("yx", "Y", "X", "current"))
    for key, a, b, role in blocks:
        for i in range(lo, hi):
            layout[(key, i)] = len(entries)
            entries.append(_word(n, {i: a, i + 1: b}, f"{a}{i}{b}{i + 1}", role))
    return Dictionary(entries, layout, name="L", meta={"range": (lo, hi)})


def dict_env_energy(spec: ChainSpec, site_range: tuple[int, int]) -> Dictionary:
    """One entry: the Hamiltonian restricted to words fully inside the range."""
    lo, hi = site_range
    _check_range(spec.n_sites, lo, hi)
    h_env = restrict_to_range(build_hamiltonian(spec), lo, hi, name=f"H_env[{lo}:{hi}]")
    if len(h_env) == 0:
        raise ValueError("environment range carries no Hamiltonian terms")
    return Dictionary([h_env], {("energy", lo): 0}, name="E", meta={"range": (lo, hi)})


def current_op(n_sites: int, i: int, sign: float = -1.0, name: str = "") -> ObservableExpr:
    """``X_i Y_{i+1} + sign * Y_i X_{i+1}`` (sign -1: spin current, +1: kinetic)."""
    xy = PauliString.from_sites(n_sites, {i: "X", i + 1: "Y"})
    yx = PauliString.from_sites(n_sites, {i: "Y", i + 1: "X"})
    role = "current" if sign < 0 else "kinetic"
    return ObservableExpr([(1.0, xy), (sign, yx)], name=name, role=role)


def dict_hydro(n_sites: int) -> Dictionary:
    """Hydrodynamic dictionary of ``8n - 11`` entries.

    Blocks: ``Z_i`` (n), ``J_i`` (n-1), ``Z_i Z_{i+1}`` (n-1), ``K_i`` (n-1),
    then four length-3 families of ``n - 2`` each: ``Z_i Z_{i+1} Z_{i+2}``,
    ``J_i Z_{i+2}``, ``Z_i J_{i+1}`` and ``K_i Z_{i+2}``.
    """
    n = n_sites
    if n < 3:
        raise ValueError("hydro dictionary needs at least 3 sites")
    entries, layout = [], {}

    def add(key, site, expr):
        layout[(key, site)] = len(entries)
        entries.append(expr)

    z = [_word(n, {i: "Z"}, f"Z{i}", "density") for i in range(n)]
    cur = [current_op(n, i, -1.0, f"J{i}") for i in range(n - 1)]
    kin = [current_op(n, i, +1.0, f"K{i}") for i in range(n - 1)]
    for i in range(n):
        add("density", i, z[i])
    for i in range(n - 1):
        add("current", i, cur[i])
    for i in range(n - 1):
        add("zz", i, _word(n, {i: "Z", i + 1: "Z"}, f"Z{i}Z{i + 1}", "correlation"))
    for i in range(n - 1):
        add("kinetic", i, kin[i])
    for i in range(n - 2):
        add("zzz", i, _word(n, {i: "Z", i + 1: "Z", i + 2: "Z"}, f"Z{i}Z{i + 1}Z{i + 2}",
                            "composite"))
    for i in range(n - 2):
        add("jz", i, expr_product(cur[i], z[i + 2], f"J{i}Z{i + 2}"))
    for i in range(n - 2):
        add("zj", i, expr_product(z[i], cur[i + 1], f"Z{i}J{i + 1}"))
    for i in range(n - 2):
        add("kz", i, expr_product(kin[i], z[i + 2], f"K{i}Z{i + 2}"))
    return Dictionary(entries, layout, name="hydro")


def build_dictionary(name: str, spec: ChainSpec, cut_after_site: int | None = None,
                     full_cap: int = FULL_PAULI_CAP) -> Dictionary:
    """Resolve a dictionary by its config name (``full``, ``A``, ``S``, ``L``, ``E``, ``hydro``)."""
    n = spec.n_sites
    key = name.strip()
    if key in ("full", "B"):
        return dict_full_pauli(n, cap=full_cap)
    if key == "A":
        return dict_macro_A(n)
    if key == "hydro":
        return dict_hydro(n)
    if key in ("S", "L", "E"):
        if cut_after_site is None:
            raise ValueError(f"dictionary {key} needs a partition (cut_after_site)")
        if key == "S":
            return dict_target_S(n, (0, cut_after_site))
        if key == "L":
            return dict_pointer_L(n, (cut_after_site + 1, n - 1))
        return dict_env_energy(spec, (cut_after_site + 1, n - 1))
    raise ValueError(f"unknown dictionary {name!r}")
