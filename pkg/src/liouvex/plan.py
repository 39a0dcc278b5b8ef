"""Validated description of one experiment run."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dictionary import FULL_PAULI_CAP
from .errors import ConfigError
from .gedmd import WindowSpec, steps_of
from .hamiltonian import ChainSpec, QuenchSpec
from .propagator import EvolutionSchedule

KINDS = ("validate", "quench", "hydro", "sweep")
DICT_NAMES = ("full", "B", "A", "S", "L", "E", "hydro")
DEFAULT_DICTIONARIES = {
    "validate": ("full", "A"),
    "quench": ("S", "L", "E"),
    "hydro": ("hydro",),
    "sweep": ("hydro",),
}
U64 = 1 << 64


@dataclass(frozen=True)
class ExperimentPlan:
    """Everything needed to reproduce a run; ``t0``/``t1`` bound the analysis window."""

    kind: str
    chain: ChainSpec
    schedule: EvolutionSchedule
    window: WindowSpec = field(default_factory=WindowSpec)
    dictionaries: tuple[str, ...] = ()
    quench: QuenchSpec | None = None
    ensemble_size: int = 500
    base_seed: int = 0
    t0: float = 0.0
    t1: float = math.inf
    margin: int = 2
    dt_cg_list: tuple[float, ...] = ()
    recon_site: int = -1
    recon_span: float = 0.0
    full_cap: int = FULL_PAULI_CAP
    out_dir: str = "out"

    def __post_init__(self):
        if not self.dictionaries:
            object.__setattr__(self, "dictionaries", DEFAULT_DICTIONARIES.get(self.kind, ()))
        if math.isinf(self.t1):
            object.__setattr__(self, "t1", self.t_max)
        self.check()

    @property
    def t_max(self) -> float:
        return self.schedule.n_steps * self.schedule.dt

    def check(self) -> None:
        """Raise :class:`ConfigError` naming the offending key."""
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}", key="kind")
        for name in self.dictionaries:
            if name not in DICT_NAMES:
                raise ConfigError(f"unknown dictionary {name!r}", key="dictionaries")
        if len(set(self.dictionaries)) != len(self.dictionaries):
            raise ConfigError("dictionary listed twice", key="dictionaries")
        if self.kind == "quench":
            if self.quench is None:
                raise ConfigError("quench runs need cut_after_site and t_q", key="t_q")
            try:
                self.quench.validate(self.chain)
            except ValueError as exc:
                raise ConfigError(str(exc), key="cut_after_site") from None
            if self.quench.t_q > self.t_max:
                raise ConfigError("t_q lies beyond t_max", key="t_q")
        if self.kind in ("hydro", "sweep") and "hydro" not in self.dictionaries:
            raise ConfigError(f"{self.kind} runs need the hydro dictionary", key="dictionaries")
        if self.kind == "sweep" and not self.dt_cg_list:
            raise ConfigError("sweep runs need at least one dt_cg value", key="dt_cg_list")
        if self.ensemble_size < 1:
            raise ConfigError("ensemble size must be >= 1", key="size")
        if not 0 <= self.base_seed < U64:
            raise ConfigError("base_seed must be an unsigned 64-bit integer", key="base_seed")
        if self.margin < 0 or (self.kind in ("hydro", "sweep")
                                and self.chain.n_sites - 2 * self.margin < 1):
            raise ConfigError(f"margin {self.margin} leaves no bulk", key="margin")
        if self.t1 < self.t0:
            raise ConfigError("t1 must be >= t0", key="t1")
        rdt = self.schedule.record_dt
        if self.schedule.n_steps % self.schedule.record_every:
            raise ConfigError("t_max must be a multiple of dt * record_every", key="t_max")
        n_win = _grid(self.window.duration, rdt, "duration")
        _grid(self.window.stride, rdt, "stride")
        if n_win < 2:
            raise ConfigError("window holds fewer than two samples", key="duration")
        if self.window.duration > self.t_max + rdt * 0.5:
            raise ConfigError("window longer than the run", key="duration")
        for dtc in self.all_dt_cg():
            if dtc == 0:
                continue
            key = "dt_cg" if dtc == self.window.dt_cg else "dt_cg_list"
            _grid(dtc, rdt, key)
            if not 0 < dtc < self.window.duration:
                raise ConfigError(f"dt_cg={dtc} must lie in (0, window duration)", key=key)
        if self.kind == "validate" and self.recon_site >= self.chain.n_sites:
            raise ConfigError("recon_site outside the chain", key="recon_site")
        if self.recon_span < 0 or self.recon_span > self.t_max + 1e-12:
            raise ConfigError("recon_span must lie in [0, t_max]", key="recon_span")
        if self.recon_span > 0:
            _grid(self.recon_span, rdt, "recon_span")

    def all_dt_cg(self) -> list[float]:
        """The window's own mode first, then the extra values, without repeats."""
        first = self.window.dt_cg if self.window.deriv_mode == "finite" else 0.0
        out = [first]
        for v in self.dt_cg_list:
            if not any(abs(v - u) < 1e-12 for u in out):
                out.append(float(v))
        return out

    def samples_per_window(self) -> int:
        return self.window.n_samples(self.schedule.record_dt)


def _grid(value: float, rdt: float, key: str) -> int:
    try:
        return steps_of(value, rdt, key)
    except ConfigError as exc:
        raise ConfigError(f"{exc} (recorded sample spacing)", key=key) from None


def member_seed(base_seed: int, index: int) -> int:
    """Seed for ensemble member ``index``.

    Mixes ``(base_seed, index)`` through :class:`numpy.random.SeedSequence`
    with ``index`` as the spawn key, so members get independent streams.
    """
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint64)[0])


def member_seeds(base_seed: int, n: int) -> list[int]:
    return [member_seed(base_seed, i) for i in range(n)]
