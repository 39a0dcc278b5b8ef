"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 numerical-integrity error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .config import load_config
from .csvio import write_csv, write_manifest
from .dictionary import build_dictionary
from .errors import ConfigError, NumericalIntegrityError
from .experiments import run_experiment
from .oracles import run_oracle_suite
from .plan import DEFAULT_DICTIONARIES

ORACLE_MAX_N = 5
COMMANDS = ("validate", "quench", "hydro", "sweep", "oracle", "dump-dictionary")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="liouvex", description="Spin-chain simulation and Liouvillian extraction.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", metavar="PATH", help="run configuration file")
    p.add_argument("--out", metavar="DIR", help="output directory (overrides [output] dir)")
    p.add_argument("--seed", metavar="U64", type=int, help="override [ensemble] base_seed")
    p.add_argument("--threads", metavar="N", type=int, default=1, help="worker threads")
    p.add_argument("--dt-cg", metavar="LIST", help="comma-separated dt_cg values (sweep only)")
    p.add_argument("--dictionary", metavar="NAME",
                   help="dump-dictionary: which dictionary (default: first configured)")
    return p


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"cannot parse --dt-cg {text!r}", key="dt-cg") from None


def _run(args) -> int:
    if not args.config:
        raise ConfigError("--config is required")
    if args.threads is not None and args.threads < 1:
        raise ConfigError("--threads must be >= 1", key="threads")
    plan = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["base_seed"] = args.seed
    if args.dt_cg is not None:
        if args.command != "sweep":
            raise ConfigError("--dt-cg is only accepted by sweep", key="dt-cg")
        changes["dt_cg_list"] = _float_list(args.dt_cg)
    if args.command in ("validate", "quench", "hydro", "sweep") and args.command != plan.kind:
        changes["kind"] = args.command
        if plan.dictionaries == DEFAULT_DICTIONARIES[plan.kind]:
            changes["dictionaries"] = ()
    if args.out:
        changes["out_dir"] = args.out
    if changes:
        plan = dataclasses.replace(plan, **changes)
    out = Path(plan.out_dir)

    if args.command == "oracle":
        max_n = min(plan.chain.n_sites, ORACLE_MAX_N)
        results = run_oracle_suite(max_n, plan.chain, seed=plan.base_seed % (1 << 32))
        path = write_csv(out / "oracle_report.csv", ("oracle", "n_sites", "max_dev", "tol", "pass"),
                         [(r.name, r.n_sites, r.max_dev, r.tol, int(r.passed)) for r in results])
        write_manifest(out, {"command": "oracle", "max_n": max_n}, [path])
        failed = [r for r in results if not r.passed]
        for r in failed:
            print(f"oracle {r.name} (n={r.n_sites}) failed: {r.max_dev:.3e} >= {r.tol:.0e}",
                  file=sys.stderr)
        print(f"{len(results) - len(failed)}/{len(results)} oracles passed -> {path}")
        return 2 if failed else 0

    if args.command == "dump-dictionary":
        cut = plan.quench.cut_after_site if plan.quench is not None else None
        name = args.dictionary or plan.dictionaries[0]
        try:
            d = build_dictionary(name, plan.chain, cut, plan.full_cap)
        except ValueError as exc:
            raise ConfigError(str(exc), key="dictionary") from None
        rows = []
        for i, e in enumerate(d.entries):
            for c, w in e.terms:
                rows.append((i, e.name, e.role, w.label, c))
        path = write_csv(out / f"dictionary_{d.name}.csv",
                         ("row", "name", "role", "word", "coeff"), rows,
                         {"entries": len(d), "word_order": "character k is site k"})
        print(f"{len(d)} entries -> {path}")
        return 0

    result = run_experiment(plan, out, args.threads)
    for msg in result.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    print(f"{plan.kind}: wrote {len(result.files)} files to {result.out_dir}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _run(args)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericalIntegrityError as exc:
        print(f"numerical integrity error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
