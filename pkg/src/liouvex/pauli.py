"""Pauli strings, real-weighted sums of them, and their action on state vectors.

Conventions
-----------
* A Pauli word on ``n`` sites is stored as two bitmasks ``(x_mask, z_mask)``.
  Site ``i`` carries ``I`` for ``(0, 0)``, ``X`` for ``(1, 0)``, ``Z`` for
  ``(0, 1)`` and ``Y`` for ``(1, 1)``.
* Site ``i`` of a state vector is bit ``i`` of the basis index (site 0 is the
  least significant bit).  Bit value 0 is the ``Z = +1`` eigenstate.
* With these conventions a word acts on a basis state as::

      P |b> = i**popcount(x & z) * (-1)**popcount(b & z) * |b ^ x>

Everything in this module is a pure function of its inputs.
"""

from __future__ import annotations

import functools
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import hadamard

from .errors import NumericalIntegrityError

IMAG_TOL = 1e-10

ROLES = frozenset(
    {"density", "current", "correlation", "kinetic", "composite", "energy", "generic"}
)

_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_BITS_LETTER = {v: k for k, v in _LETTER_BITS.items()}
_PHASES = (1 + 0j, 1j, -1 + 0j, -1j)

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True, order=True)
class PauliString:
    """Tensor product of single-site Pauli letters, encoded as bitmasks."""

    n_sites: int
    x_mask: int
    z_mask: int

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be >= 1")
        limit = 1 << self.n_sites
        if not (0 <= self.x_mask < limit and 0 <= self.z_mask < limit):
            raise ValueError(f"masks exceed {self.n_sites} sites")

    @classmethod
    def from_label(cls, label: str) -> PauliString:
        """Build from a letter string where character ``k`` is site ``k``."""
        x = z = 0
        for i, ch in enumerate(label.upper()):
            try:
                bx, bz = _LETTER_BITS[ch]
            except KeyError:
                raise ValueError(f"invalid Pauli letter {ch!r}") from None
            x |= bx << i
            z |= bz << i
        return cls(len(label), x, z)

    @classmethod
    def from_sites(cls, n_sites: int, letters: Mapping[int, str]) -> PauliString:
        """Build from a ``{site: letter}`` mapping; unlisted sites are identity."""
        x = z = 0
        for site, ch in letters.items():
            if not 0 <= site < n_sites:
                raise ValueError(f"site {site} outside chain of {n_sites}")
            bx, bz = _LETTER_BITS[ch.upper()]
            x |= bx << site
            z |= bz << site
        return cls(n_sites, x, z)

    @classmethod
    def identity(cls, n_sites: int) -> PauliString:
        return cls(n_sites, 0, 0)

    def letter(self, site: int) -> str:
        return _BITS_LETTER[((self.x_mask >> site) & 1, (self.z_mask >> site) & 1)]

    @property
    def label(self) -> str:
        return "".join(self.letter(i) for i in range(self.n_sites))

    @property
    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    @property
    def support(self) -> tuple[int, ...]:
        m = self.x_mask | self.z_mask
        return tuple(i for i in range(self.n_sites) if (m >> i) & 1)

    @property
    def y_count(self) -> int:
        return _popcount(self.x_mask & self.z_mask)

    def compact(self) -> str:
        """Short human form such as ``X0Y1`` (``I`` for the identity)."""
        parts = [f"{self.letter(i)}{i}" for i in self.support]
        return "".join(parts) if parts else "I"

    def commutes_with(self, other: PauliString) -> bool:
        sym = _popcount(self.x_mask & other.z_mask) + _popcount(self.z_mask & other.x_mask)
        return sym % 2 == 0

    def to_dense(self) -> np.ndarray:
        """Dense ``2**n x 2**n`` matrix (for oracles; site 0 is the last kron factor)."""
        out = np.ones((1, 1), dtype=complex)
        for i in reversed(range(self.n_sites)):
            out = np.kron(out, _SINGLE[self.letter(i)])
        return out

    def __str__(self):
        return self.label


def pauli_mul(p: PauliString, q: PauliString) -> tuple[complex, PauliString]:
    """Product of two words as ``(phase, word)`` with ``phase`` in {1, -1, 1j, -1j}.

    >>> pauli_mul(PauliString.from_label("X"), PauliString.from_label("Z"))
    (-1j, PauliString(n_sites=1, x_mask=1, z_mask=1))
    """
    if p.n_sites != q.n_sites:
        raise ValueError(f"length mismatch: {p.n_sites} vs {q.n_sites}")
    x = p.x_mask ^ q.x_mask
    z = p.z_mask ^ q.z_mask
    # P = i^{|x&z|} X^x Z^z, and Z^z1 X^x2 = (-1)^{|z1&x2|} X^x2 Z^z1
    k = p.y_count + q.y_count - _popcount(x & z) + 2 * _popcount(p.z_mask & q.x_mask)
    return _PHASES[k % 4], PauliString(p.n_sites, x, z)


class ObservableExpr:
    """Real-weighted sum of Pauli words, i.e. a Hermitian operator.

    Duplicate words are merged and zero coefficients dropped on construction;
    term order follows the first occurrence of each word.
    """

    __slots__ = ("n_sites", "terms", "name", "role")

    def __init__(
        self,
        terms: Iterable[tuple[float, PauliString]],
        name: str = "",
        role: str = "generic",
        n_sites: int | None = None,
    ):
        if role not in ROLES:
            raise ValueError(f"unknown role {role!r}")
        merged: dict[PauliString, float] = {}
        for coeff, word in terms:
            if isinstance(coeff, complex):
                if abs(coeff.imag) > 1e-14:
                    raise ValueError(f"non-real coefficient {coeff} on {word}")
                coeff = coeff.real
            if n_sites is None:
                n_sites = word.n_sites
            elif word.n_sites != n_sites:
                raise ValueError("all words must act on the same number of sites")
            merged[word] = merged.get(word, 0.0) + float(coeff)
        if n_sites is None:
            raise ValueError("empty expression needs an explicit n_sites")
        self.n_sites = n_sites
        self.terms = tuple((c, w) for w, c in merged.items() if c != 0.0)
        self.name = name
        self.role = role

    @classmethod
    def word(cls, word: PauliString | str, coeff: float = 1.0, name: str = "",
             role: str = "generic") -> ObservableExpr:
        if isinstance(word, str):
            word = PauliString.from_label(word)
        return cls([(coeff, word)], name=name or word.compact(), role=role)

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __repr__(self):
        body = " + ".join(f"{c:g}*{w.compact()}" for c, w in self.terms) or "0"
        return f"ObservableExpr({self.name!r}: {body})"

    def as_dict(self) -> dict[PauliString, float]:
        return {w: c for c, w in self.terms}

    def __eq__(self, other):
        if not isinstance(other, ObservableExpr):
            return NotImplemented
        return self.n_sites == other.n_sites and self.as_dict() == other.as_dict()

    def __hash__(self):
        return hash((self.n_sites, frozenset(self.as_dict().items())))

    @property
    def words(self) -> tuple[PauliString, ...]:
        return tuple(w for _, w in self.terms)

    def renamed(self, name: str, role: str | None = None) -> ObservableExpr:
        return ObservableExpr(self.terms, name=name, role=role or self.role,
                              n_sites=self.n_sites)

    def scaled(self, factor: float) -> ObservableExpr:
        return ObservableExpr(((factor * c, w) for c, w in self.terms), self.name,
                              self.role, self.n_sites)

    def __add__(self, other: ObservableExpr) -> ObservableExpr:
        return ObservableExpr(self.terms + other.terms, self.name, self.role, self.n_sites)

    def __sub__(self, other: ObservableExpr) -> ObservableExpr:
        return self + other.scaled(-1.0)

    def __neg__(self):
        return self.scaled(-1.0)

    def filter(self, keep) -> ObservableExpr:
        """Sub-expression of the terms whose word satisfies ``keep(word)``."""
        return ObservableExpr(((c, w) for c, w in self.terms if keep(w)), self.name,
                              self.role, self.n_sites)

    def to_sparse(self) -> sp.csr_matrix:
        dim = 1 << self.n_sites
        b = np.arange(dim)
        rows, cols, vals = [], [], []
        for c, w in self.terms:
            rows.append(b ^ w.x_mask)
            cols.append(b)
            vals.append(c * _phase_vector(self.n_sites, w.x_mask, w.z_mask))
        if not rows:
            return sp.csr_matrix((dim, dim), dtype=complex)
        m = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(dim, dim),
        )
        return m.tocsr()

    def to_dense(self) -> np.ndarray:
        dim = 1 << self.n_sites
        out = np.zeros((dim, dim), dtype=complex)
        for c, w in self.terms:
            out += c * w.to_dense()
        return out


def _complex_product(a: ObservableExpr, b: ObservableExpr) -> dict[PauliString, complex]:
    acc: dict[PauliString, complex] = {}
    for ca, wa in a.terms:
        for cb, wb in b.terms:
            phase, w = pauli_mul(wa, wb)
            acc[w] = acc.get(w, 0j) + ca * cb * phase
    return acc


def expr_product(a: ObservableExpr, b: ObservableExpr, name: str = "",
                 role: str = "composite") -> ObservableExpr:
    """Operator product ``a·b``; raises ``ValueError`` unless it is Hermitian."""
    acc = _complex_product(a, b)
    bad = [w for w, c in acc.items() if abs(c.imag) > 1e-14]
    if bad:
        raise ValueError(f"product {a.name}*{b.name} is not Hermitian")
    return ObservableExpr(((c.real, w) for w, c in acc.items()), name, role, a.n_sites)


def commutator(h: ObservableExpr, o: ObservableExpr, name: str = "") -> ObservableExpr:
    """The Hermitian operator ``i[h, o]`` expanded into Pauli words."""
    ab = _complex_product(h, o)
    ba = _complex_product(o, h)
    acc = {w: 1j * (ab.get(w, 0j) - ba.get(w, 0j)) for w in set(ab) | set(ba)}
    terms = []
    for w in sorted(acc):
        c = acc[w]
        if abs(c.imag) > 1e-12:
            raise NumericalIntegrityError("i[h, o] produced a non-real coefficient")
        terms.append((c.real, w))
    return ObservableExpr(terms, name or f"i[{h.name},{o.name}]", "generic", h.n_sites)


@functools.lru_cache(maxsize=8192)
def _phase_vector(n_sites: int, x_mask: int, z_mask: int) -> np.ndarray:
    b = np.arange(1 << n_sites, dtype=np.int64)
    sign = 1.0 - 2.0 * (np.bitwise_count(b & z_mask) & 1)
    out = _PHASES[_popcount(x_mask & z_mask) % 4] * sign
    out.setflags(write=False)
    return out


@functools.lru_cache(maxsize=8192)
def _flip_index(n_sites: int, x_mask: int) -> np.ndarray:
    out = np.arange(1 << n_sites, dtype=np.int64) ^ x_mask
    out.setflags(write=False)
    return out


def _check_dim(n_sites: int, psi: np.ndarray) -> None:
    if psi.shape[0] != 1 << n_sites:
        raise ValueError(f"state of length {psi.shape[0]} does not match {n_sites} sites")


def apply_word(word: PauliString, psi: np.ndarray) -> np.ndarray:
    """``P|psi>`` for a single word (``psi`` may carry trailing batch axes)."""
    _check_dim(word.n_sites, psi)
    ph = _phase_vector(word.n_sites, word.x_mask, word.z_mask)
    idx = _flip_index(word.n_sites, word.x_mask)
    if psi.ndim > 1:
        ph = ph.reshape((-1,) + (1,) * (psi.ndim - 1))
    return (ph * psi)[idx]


def apply_expr(o: ObservableExpr, psi: np.ndarray) -> np.ndarray:
    """Matrix-free ``O|psi>``: one bit-flip gather and one phase multiply per term."""
    _check_dim(o.n_sites, psi)
    out = np.zeros(psi.shape, dtype=complex)
    for c, w in o.terms:
        out += c * apply_word(w, psi)
    return out


def _real_or_raise(value: complex, what: str) -> float:
    if abs(value.imag) > IMAG_TOL:
        raise NumericalIntegrityError(
            f"{what} has imaginary residue {abs(value.imag):.3e} > {IMAG_TOL:g}"
        )
    return float(value.real)


def expectation(psi: np.ndarray, o: ObservableExpr) -> float:
    """Real part of ``<psi|O|psi>``; aborts on an imaginary residue above 1e-10."""
    return _real_or_raise(np.vdot(psi, apply_expr(o, psi)), f"<{o.name}>")


def commutator_expectation(psi: np.ndarray, h: ObservableExpr, o: ObservableExpr) -> float:
    """``i<psi|[H, O]|psi>`` from the two vectors ``H|psi>`` and ``O|psi>``."""
    if h.n_sites != o.n_sites:
        raise ValueError("h and o act on different chains")
    hpsi = apply_expr(h, psi)
    opsi = apply_expr(o, psi)
    val = 1j * (np.vdot(hpsi, opsi) - np.vdot(opsi, hpsi))
    return _real_or_raise(val, f"i<[{h.name},{o.name}]>")


class ExprBank:
    """Batched evaluator for a fixed list of expressions.

    Terms are grouped by their ``x_mask`` so that each distinct bit flip is
    gathered once per batch; the remaining work is one real-sign matrix
    product per group.  States are passed as rows of a ``(batch, 2**n)`` array.
    """

    def __init__(self, exprs: Sequence[ObservableExpr]):
        if not exprs:
            raise ValueError("ExprBank needs at least one expression")
        n = exprs[0].n_sites
        if any(e.n_sites != n for e in exprs):
            raise ValueError("expressions act on different chains")
        self.n_sites = n
        self.n_exprs = len(exprs)
        b = np.arange(1 << n, dtype=np.int64)
        groups: dict[int, list[tuple[int, float, int]]] = {}
        for k, e in enumerate(exprs):
            for c, w in e.terms:
                groups.setdefault(w.x_mask, []).append((k, c, w.z_mask))
        self._groups = []
        for x in sorted(groups):
            items = groups[x]
            z = np.array([it[2] for it in items], dtype=np.int64)
            signs = 1.0 - 2.0 * (np.bitwise_count(b[None, :] & z[:, None]) & 1)
            yph = np.array([_PHASES[_popcount(x & int(zz)) % 4] for zz in z])
            weights = np.zeros((len(items), self.n_exprs), dtype=complex)
            for row, (k, c, _) in enumerate(items):
                weights[row, k] = c * yph[row]
            self._groups.append((b ^ x, signs.T.copy(), weights))

    def _brackets(self, bra: np.ndarray, ket: np.ndarray) -> np.ndarray:
        """``<bra_r|O_k|ket_r>`` for every row ``r`` and expression ``k``."""
        if bra.ndim == 1:
            return self._brackets(bra[None, :], ket[None, :])[0]
        if bra.shape[1] != 1 << self.n_sites:
            raise ValueError("state dimension does not match the bank")
        out = np.zeros((bra.shape[0], self.n_exprs), dtype=complex)
        ket = np.ascontiguousarray(ket, dtype=complex)
        n_b, dim = ket.shape
        for flip, signs, weights in self._groups:
            prod = np.conj(np.take(bra, flip, axis=1))
            prod *= ket
            # two real products are much cheaper than promoting signs to complex
            parts = prod.view(float).reshape(n_b, dim, 2)
            re = np.ascontiguousarray(parts[:, :, 0]) @ signs
            im = np.ascontiguousarray(parts[:, :, 1]) @ signs
            out += (re + 1j * im) @ weights
        return out

    def expectations(self, states: np.ndarray) -> np.ndarray:
        vals = self._brackets(states, states)
        resid = np.abs(vals.imag).max(initial=0.0)
        if resid > IMAG_TOL:
            raise NumericalIntegrityError(
                f"expectation imaginary residue {resid:.3e} > {IMAG_TOL:g}"
            )
        return vals.real

    def derivatives(self, states: np.ndarray, hstates: np.ndarray) -> np.ndarray:
        """``i<psi|[H, O_k]|psi>`` given ``H|psi>`` rows; equals ``-2 Im <H psi|O|psi>``."""
        return -2.0 * self._brackets(hstates, states).imag


class FullPauliBank:
    """Evaluator for every non-identity word on ``n`` sites at once.

    Output columns follow the ``(z_mask, x_mask)`` lexicographic order with the
    identity removed, so column ``z * 2**n + x - 1`` holds word ``(x, z)``.
    Cost per state is one ``2**n x 2**n`` gather plus a Walsh-Hadamard product.
    """

    def __init__(self, n_sites: int):
        self.n_sites = n_sites
        dim = 1 << n_sites
        self.n_exprs = dim * dim - 1
        b = np.arange(dim, dtype=np.int64)
        self._flip = b[:, None] ^ b[None, :]
        self._had = hadamard(dim).astype(float)
        # transposed to [z, x] order up front
        self._yph = np.array(_PHASES)[np.bitwise_count(b[:, None] & b[None, :]) % 4].T

    def _bracket(self, bra: np.ndarray, ket: np.ndarray) -> np.ndarray:
        prod = np.conj(bra[self._flip]) * ket[None, :]
        w = (prod @ self._had).T * self._yph
        return w.ravel()[1:]

    def _batched(self, bra, ket):
        if bra.ndim == 1:
            return self._bracket(bra, ket)
        out = np.empty((bra.shape[0], self.n_exprs), dtype=complex)
        for r in range(bra.shape[0]):
            out[r] = self._bracket(bra[r], ket[r])
        return out

    def expectations(self, states: np.ndarray) -> np.ndarray:
        vals = self._batched(states, states)
        resid = np.abs(vals.imag).max(initial=0.0)
        if resid > IMAG_TOL:
            raise NumericalIntegrityError(
                f"expectation imaginary residue {resid:.3e} > {IMAG_TOL:g}"
            )
        return vals.real

    def derivatives(self, states: np.ndarray, hstates: np.ndarray) -> np.ndarray:
        return -2.0 * self._batched(hstates, states).imag
