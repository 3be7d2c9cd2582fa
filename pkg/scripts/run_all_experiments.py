#!/usr/bin/env python3
"""Run every experiment for one configuration and print a short digest.

    python3 scripts/run_all_experiments.py scripts/configs/sphere.json
    python3 scripts/run_all_experiments.py scripts/configs/ellipsoid.json --skip qe-stat weyl window
"""
import argparse
import json
import sys
import time
from pathlib import Path

from revqe.cli import RUNNERS
from revqe.config import ConfigError, load


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("config", type=Path)
    ap.add_argument("--out", type=Path)
    ap.add_argument("--skip", nargs="*", default=[], choices=list(RUNNERS))
    args = ap.parse_args()
    try:
        cfg = load(args.config)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 1
    out = args.out or Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    digest = {}
    for name, runner in RUNNERS.items():
        if name in args.skip:
            continue
        t0 = time.perf_counter()
        try:
            cfg.validate(qe=name in ("window", "qe-stat", "weyl"))
            runner(cfg, out)
            status = "ok"
        except (ConfigError, ValueError, ArithmeticError, RuntimeError) as exc:
            status = f"failed: {exc}"
        digest[name] = {"status": status, "seconds": round(time.perf_counter() - t0, 2)}
        print(f"{name:10s} {digest[name]['seconds']:7.2f}s  {status}")
    (out / "run_all.json").write_text(json.dumps(digest, indent=2, sort_keys=True) + "\n")
    return 0 if all(d["status"] == "ok" for d in digest.values()) else 2


if __name__ == "__main__":
    sys.exit(main())
