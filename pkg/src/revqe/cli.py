"""``revqe`` command line.

    revqe <subcommand> --config <path> [--out <dir>] [--override key=value ...]

Exit codes: 0 success, 1 invalid configuration, 2 numerical failure,
3 acceptance failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiments as ex
from .config import ConfigError, load
from .spectral import NumericalFailure

log = logging.getLogger("revqe")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ACCEPTANCE = 0, 1, 2, 3

RUNNERS = {
    "spectrum": ex.run_spectrum,
    "qlimit": ex.run_qlimit,
    "partition": ex.run_partition,
    "window": ex.run_window,
    "qe-stat": ex.run_qe_stat,
    "weyl": ex.run_weyl,
    "legendre": ex.run_legendre,
    "zonal": ex.run_zonal,
    "flow": ex.run_flow,
}


def _verify(cfg, out: Path) -> int:
    from .acceptance import run_all

    checks = run_all(echo=print)
    summary = {
        "passed": all(c.passed for c in checks),
        "checks": [{"number": c.number, "name": c.name, "passed": c.passed, "detail": c.detail} for c in checks],
    }
    ex.write_json(out / "verify.json", summary, cfg)
    return EXIT_OK if summary["passed"] else EXIT_ACCEPTANCE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="revqe", description="Equivariant quantum ergodicity on spheres of revolution.")
    p.add_argument("subcommand", choices=[*RUNNERS, "verify"])
    p.add_argument("--config", type=Path, default=None, help="JSON experiment configuration")
    p.add_argument("--out", type=Path, default=None, help="output directory (overrides config 'out')")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE", help="override a config key; JSON values")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load(args.config, args.override)
        if args.out is not None:
            cfg.out = str(args.out)
        cfg.validate(qe=args.subcommand in ("window", "qe-stat", "weyl"))
    except ConfigError as exc:
        print(f"revqe: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if args.subcommand == "verify":
            return _verify(cfg, out)
        RUNNERS[args.subcommand](cfg, out)
    except ConfigError as exc:
        print(f"revqe: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, ValueError, ArithmeticError) as exc:
        print(f"revqe: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    log.info("wrote %s output to %s", args.subcommand, out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
