"""Command line entry point.

Exit codes: 0 success, 2 configuration error, 3 invariant failure.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace

import numpy as np

from .config import ConfigError, ScenarioConfig, paper_scenario
from .harness import FIGURES, preset, run_figure, write_csv
from .theory import kmr_curve, kmr_limit

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _parse_range(text: str):
    try:
        lo, hi, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise ConfigError(f"--ratio-db expects min:max:step, got {text!r}") from None
    if step <= 0 or hi < lo:
        raise ConfigError("--ratio-db needs step > 0 and max >= min")
    return np.arange(lo, hi + step / 2, step)


def _cmd_run(args) -> int:
    base = ScenarioConfig.from_json(args.config) if args.config else paper_scenario()
    seed = base.seed if args.seed is None else args.seed
    spec = preset(args.figure, base, rounds=args.rounds, seed=seed)
    if args.epochs is not None:
        spec = replace(spec, epochs=args.epochs)
    rows = run_figure(spec, threads=args.threads)
    write_csv(spec, rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _cmd_theory(args) -> int:
    if not 0.0 <= args.beta < 0.5:
        raise ConfigError("--beta must lie in [0, 0.5)")
    db = _parse_range(args.ratio_db)
    p = kmr_curve(args.beta, db)
    with open(args.out, "w", newline="") as fh:
        fh.write(f"# beta: {args.beta}\n# limit: {kmr_limit(args.beta):.10g}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("ratio_db", "kmr"))
        for x, y in zip(db, p):
            w.writerow((format(float(x), ".10g"), format(float(y), ".10g")))
    print(f"wrote {db.size} points to {args.out}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    from .checks import run_checks

    results = run_checks()
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="riskeysim", description="Adversarial-RIS key generation simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a figure preset and write CSV")
    r.add_argument("--figure", required=True, choices=FIGURES)
    r.add_argument("--config", help="scenario JSON (defaults to the reference scene)")
    r.add_argument("--out", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--rounds", type=int)
    r.add_argument("--threads", type=int, default=1)
    r.add_argument("--epochs", type=int, help="scatterer epochs per point (default 200)")
    r.set_defaults(func=_cmd_run)

    t = sub.add_parser("theory", help="theoretical key match rate curve")
    t.add_argument("--beta", type=float, default=0.1)
    t.add_argument("--ratio-db", default="-20:40:1", help="min:max:step of sigma_E^2/sigma_h^2 in dB")
    t.add_argument("--out", required=True)
    t.set_defaults(func=_cmd_theory)

    v = sub.add_parser("validate", help="run the invariant self-checks")
    v.set_defaults(func=_cmd_validate)
    return p


def _join_ranges(argv):
    # argparse reads "-20:40:1" as an option flag; glue it to its option
    out = []
    for tok in argv:
        if out and out[-1] == "--ratio-db" and tok.startswith("-"):
            out[-1] = f"--ratio-db={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_ranges(argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
