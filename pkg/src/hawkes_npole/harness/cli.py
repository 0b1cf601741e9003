"""``hawkes-npole`` command-line interface.

Exit codes: 0 success, 1 runtime failure, 2 invalid input or config,
3 an acceptance gate failed under ``--check``.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time

import numpy as np

from ..metrics import config_fingerprint
from ..npole import thread_count
from ..process import EventFormatError, read_events
from .config import KINDS, ConfigError, defaults_yaml, load_config
from .experiments import RUNNERS

EXIT_OK, EXIT_RUNTIME, EXIT_INPUT, EXIT_CHECK = 0, 1, 2, 3


def _versions() -> dict:
    import numba
    import scipy

    from .. import __version__

    return {
        "hawkes_npole": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
    }


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


def dump_json(obj, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2, default=_json_default)
        fh.write("\n")


def run(cfg, check: bool = False, out=None) -> int:
    """Run one experiment, write ``report.json`` and ``manifest.json``, return the exit code."""
    out = sys.stdout if out is None else out
    outdir = cfg["output"]
    os.makedirs(outdir, exist_ok=True)
    t0 = time.perf_counter()
    result = RUNNERS[cfg.kind](cfg, outdir)
    report, checks = result[0], result[1]
    timing = result[2] if len(result) > 2 else {}
    wall = time.perf_counter() - t0
    fp = config_fingerprint(cfg.fingerprint_dict())
    report = {"kind": cfg.kind, "config_fingerprint": fp, **report,
              "checks": [{"name": n, "passed": bool(ok), "detail": d} for n, ok, d in checks]}
    dump_json(report, os.path.join(outdir, "report.json"))
    manifest = {"config": cfg.raw, "config_fingerprint": fp, "versions": _versions(),
                "wall_seconds": wall, "threads": int(cfg["threads"]), **timing}
    dump_json(manifest, os.path.join(outdir, "manifest.json"))
    for n, ok, d in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {n}  ({d})", file=out)
    print(f"wrote {os.path.join(outdir, 'report.json')}", file=out)
    if check and not all(ok for _, ok, _ in checks):
        return EXIT_CHECK
    return EXIT_OK


def ingest(path: str, sort: bool, out=None) -> int:
    out = sys.stdout if out is None else out
    stream = read_events(path, sort=sort)
    counts = stream.counts()
    rates = counts / stream.T if stream.T > 0 else np.zeros_like(counts, dtype=float)
    print(f"p={stream.p} N(T)={len(stream)} T={stream.T!r}", file=out)
    for i, (c, r) in enumerate(zip(counts, rates)):
        print(f"dim {i + 1}: count {int(c)} rate {float(r):.6g}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hawkes-npole", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        sp = sub.add_parser(kind, help=f"run the {kind} experiment")
        sp.add_argument("--config", help="YAML config file")
        scale = sp.add_mutually_exclusive_group()
        scale.add_argument("--desk", action="store_true", help="T=1e4, 10 trials")
        scale.add_argument("--paper", action="store_true", help="T=1e5, 100 trials")
        sp.add_argument("--check", action="store_true", help="exit 3 when an acceptance gate fails")
        sp.add_argument("--threads", type=int, help="parallelism cap")
        sp.add_argument("--seed", type=int, help="base seed; trial n uses seed + n")
        sp.add_argument("--trials", type=int)
        sp.add_argument("--T", type=float, dest="horizon", help="horizon")
        sp.add_argument("--output", help="output directory")
        sp.add_argument("--events", help="event CSV (fit) or function directory (evaluate)")
        sp.add_argument("--sort", action="store_true", help="accept unsorted event files")
        sp.add_argument("--model", choices=("npole", "exp"), help="estimator used by fit")
    sp = sub.add_parser("ingest", help="validate an event file and print summary stats")
    sp.add_argument("path")
    sp.add_argument("--sort", action="store_true")
    sp = sub.add_parser("config", help="print configuration defaults")
    sp.add_argument("--defaults", action="store_true")
    return ap


def _overrides(args) -> dict:
    o = {"kind": args.command}
    for key, val in (("seed", args.seed), ("trials", args.trials), ("T", args.horizon),
                     ("output", args.output), ("events", args.events), ("estimator", args.model),
                     ("threads", args.threads)):
        if val is not None:
            o[key] = val
    if args.sort:
        o["sort"] = True
    return o


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "config":
            sys.stdout.write(defaults_yaml())
            return EXIT_OK
        if args.command == "ingest":
            return ingest(args.path, args.sort)
        preset = "desk" if args.desk else "paper" if args.paper else None
        overrides = _overrides(args)
        cfg = load_config(args.config, preset, overrides)
        if args.output is None and args.config is None:
            cfg.raw["output"] = os.path.join("runs", args.command)
        cfg.raw["threads"] = thread_count(cfg["threads"])
        cfg.validate()
    except (ConfigError, EventFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        return run(cfg, args.check)
    except EventFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
