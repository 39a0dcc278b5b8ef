"""Sectioned ``key = value`` run configuration.

Sections and keys (everything is optional except ``[experiment] kind``)::

    [chain]       n_sites, j, delta, j2
    [schedule]    dt, t_max, record_every
    [window]      duration, stride, deriv_mode, dt_cg
    [ensemble]    size, base_seed
    [experiment]  kind, dictionaries, cut_after_site, t_q, recon_site,
                  recon_span, full_cap
    [analysis]    t0, t1, margin, dt_cg_list
    [output]      dir

Lists are comma separated.  Unknown sections or keys are rejected, and every
error names the offending key and its line.
"""

from __future__ import annotations

import configparser
import re
from collections.abc import Callable

from .csvio import format_number
from .errors import ConfigError
from .gedmd import WindowSpec, steps_of
from .hamiltonian import ChainSpec, QuenchSpec
from .plan import ExperimentPlan
from .propagator import EvolutionSchedule

# desk-scale chain size and run length per experiment kind
KIND_DEFAULTS = {
    "validate": {"n_sites": 6, "t_max": 0.6},
    "quench": {"n_sites": 10, "t_max": 5.0, "cut_after_site": 1, "t_q": 4.0},
    "hydro": {"n_sites": 12, "t_max": 3.0},
    "sweep": {"n_sites": 12, "t_max": 3.0},
}

SCHEMA: dict[str, tuple[str, ...]] = {
    "chain": ("n_sites", "j", "delta", "j2"),
    "schedule": ("dt", "t_max", "record_every"),
    "window": ("duration", "stride", "deriv_mode", "dt_cg"),
    "ensemble": ("size", "base_seed"),
    "experiment": ("kind", "dictionaries", "cut_after_site", "t_q", "recon_site",
                   "recon_span", "full_cap"),
    "analysis": ("t0", "t1", "margin", "dt_cg_list"),
    "output": ("dir",),
}

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")


def _line_index(text: str) -> dict[tuple[str | None, str], int]:
    """1-based line of every ``(section, key)`` and of each section header."""
    where: dict[tuple[str | None, str], int] = {}
    section = None
    for no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped[0] in "#;":
            continue
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            where.setdefault((None, section), no)
            continue
        m = _KEY_RE.match(line)
        if m:
            where.setdefault((section, m.group(1).strip().lower()), no)
    return where


class _Reader:
    def __init__(self, parser: configparser.ConfigParser, lines: dict):
        self.parser = parser
        self.lines = lines

    def line(self, section: str, key: str) -> int | None:
        return self.lines.get((section, key))

    def has(self, section: str, key: str) -> bool:
        return self.parser.has_option(section, key)

    def get(self, section: str, key: str, conv: Callable, default):
        if not self.has(section, key):
            return default
        raw = self.parser.get(section, key).strip()
        try:
            return conv(raw)
        except (ValueError, OverflowError) as exc:
            raise ConfigError(f"cannot parse {raw!r}: {exc}", key=key,
                              line=self.line(section, key)) from None


def _int(raw: str) -> int:
    return int(raw, 0)


def _float(raw: str) -> float:
    return float(raw)


def _float_list(raw: str) -> tuple[float, ...]:
    return tuple(float(p) for p in raw.split(",") if p.strip())


def _name_list(raw: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in raw.split(",") if p.strip())


def parse_config(text: str) -> ExperimentPlan:
    """Parse and fully validate a configuration document."""
    parser = configparser.ConfigParser(interpolation=None, strict=True,
                                       inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(f"malformed config: {exc.message if hasattr(exc, 'message') else exc}",
                          line=line) from None
    lines = _line_index(text)
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", key=section,
                              line=lines.get((None, section)))
        for key in parser.options(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key in [{section}]", key=key,
                                  line=lines.get((section, key)))
    r = _Reader(parser, lines)

    def fail(msg, section, key):
        raise ConfigError(msg, key=key, line=r.line(section, key))

    if not r.has("experiment", "kind"):
        raise ConfigError("missing experiment kind", key="kind")
    kind = r.get("experiment", "kind", str, None)
    if kind not in KIND_DEFAULTS:
        fail(f"unknown experiment kind {kind!r}", "experiment", "kind")
    kd = KIND_DEFAULTS[kind]

    try:
        chain = ChainSpec(
            n_sites=r.get("chain", "n_sites", _int, kd["n_sites"]),
            j=r.get("chain", "j", _float, 1.0),
            delta=r.get("chain", "delta", _float, 1.0),
            j2=r.get("chain", "j2", _float, 0.5),
        )
    except ValueError as exc:
        fail(str(exc), "chain", "n_sites")

    dt = r.get("schedule", "dt", _float, 0.002)
    t_max = r.get("schedule", "t_max", _float, kd["t_max"])
    record_every = r.get("schedule", "record_every", _int, 1)
    if dt <= 0:
        fail("dt must be > 0", "schedule", "dt")
    try:
        n_steps = steps_of(t_max, dt, "t_max")
        schedule = EvolutionSchedule(dt, n_steps, record_every)
    except ValueError as exc:
        key = "record_every" if "record_every" in str(exc) else "t_max"
        fail(str(exc).split(" (key")[0], "schedule", key)

    mode = r.get("window", "deriv_mode", str, "exact")
    dt_cg = r.get("window", "dt_cg", _float, 0.0)
    if mode not in ("exact", "finite"):
        fail(f"deriv_mode must be exact or finite, got {mode!r}", "window", "deriv_mode")
    if mode == "exact" and dt_cg != 0:
        fail("dt_cg is only meaningful with deriv_mode = finite", "window", "dt_cg")
    try:
        window = WindowSpec(
            duration=r.get("window", "duration", _float, 0.6),
            stride=r.get("window", "stride", _float, 0.1),
            deriv_mode=mode,
            dt_cg=dt_cg,
        )
    except ValueError as exc:
        fail(str(exc), "window", "dt_cg" if "dt_cg" in str(exc) else "duration")

    quench = None
    if kind == "quench" or r.has("experiment", "t_q") or r.has("experiment", "cut_after_site"):
        quench = QuenchSpec(
            cut_after_site=r.get("experiment", "cut_after_site", _int,
                                 kd.get("cut_after_site", 0)),
            t_q=r.get("experiment", "t_q", _float, kd.get("t_q", 0.0)),
        )

    try:
        plan = ExperimentPlan(
            kind=kind,
            chain=chain,
            schedule=schedule,
            window=window,
            dictionaries=r.get("experiment", "dictionaries", _name_list, ()),
            quench=quench,
            ensemble_size=r.get("ensemble", "size", _int, 500),
            base_seed=r.get("ensemble", "base_seed", _int, 0),
            t0=r.get("analysis", "t0", _float, 0.0),
            t1=r.get("analysis", "t1", _float, float("inf")),
            margin=r.get("analysis", "margin", _int, 2),
            dt_cg_list=r.get("analysis", "dt_cg_list", _float_list, ()),
            recon_site=r.get("experiment", "recon_site", _int, 3 if kind == "validate" else -1),
            recon_span=r.get("experiment", "recon_span", _float, 0.0),
            full_cap=r.get("experiment", "full_cap", _int, 8),
            out_dir=r.get("output", "dir", str, "out"),
        )
    except ConfigError as exc:
        if exc.key is not None and exc.line is None:
            section = next((s for s, keys in SCHEMA.items() if exc.key in keys), None)
            raise ConfigError(str(exc).split(" (key")[0], key=exc.key,
                              line=r.line(section, exc.key)) from None
        raise
    return plan


def plan_sections(plan: ExperimentPlan) -> dict[str, dict[str, str]]:
    """Every field of ``plan`` as explicit config text, defaults included."""
    f = format_number
    sections = {
        "chain": {"n_sites": f(plan.chain.n_sites), "j": f(plan.chain.j),
                  "delta": f(plan.chain.delta), "j2": f(plan.chain.j2)},
        "schedule": {"dt": f(plan.schedule.dt), "t_max": f(plan.t_max),
                     "record_every": f(plan.schedule.record_every)},
        "window": {"duration": f(plan.window.duration), "stride": f(plan.window.stride),
                   "deriv_mode": plan.window.deriv_mode, "dt_cg": f(plan.window.dt_cg)},
        "ensemble": {"size": f(plan.ensemble_size), "base_seed": f(plan.base_seed)},
        "experiment": {"kind": plan.kind, "dictionaries": ", ".join(plan.dictionaries)},
        "analysis": {"t0": f(plan.t0), "t1": f(plan.t1), "margin": f(plan.margin),
                     "dt_cg_list": ", ".join(f(v) for v in plan.dt_cg_list)},
        "output": {"dir": plan.out_dir},
    }
    exp = sections["experiment"]
    if plan.quench is not None:
        exp["cut_after_site"] = f(plan.quench.cut_after_site)
        exp["t_q"] = f(plan.quench.t_q)
    exp["recon_site"] = f(plan.recon_site)
    exp["recon_span"] = f(plan.recon_span)
    exp["full_cap"] = f(plan.full_cap)
    return sections


def render(plan: ExperimentPlan, include_output: bool = True) -> str:
    """Config text that parses back to ``plan``."""
    out = []
    for section, items in plan_sections(plan).items():
        if section == "output" and not include_output:
            continue
        out.append(f"[{section}]")
        out.extend(f"{k} = {v}" for k, v in items.items())
        out.append("")
    return "\n".join(out)


def load_config(path) -> ExperimentPlan:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)
