"""Command line: ``pepsplit sweep|best|validate --config FILE``."""

from __future__ import annotations

import argparse
import logging
import sys

from .core import MethodSpec, PairRegion, admissible_step_range, validate
from .emit import emit
from .harness import ConfigError, failed_samples, find_best, load_config, sweep

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    formats = [f.strip() for f in args.format.split(",") if f.strip()]
    bad = set(formats) - {"csv", "svg"}
    if bad:
        raise ConfigError(f"unknown output format(s) {sorted(bad)}")
    curves = sweep(cfg, workers=args.workers)
    for path in emit(curves, args.out, cfg.name, formats, cfg.axis):
        print(path)
    failures = failed_samples(curves)
    if failures:
        print(f"warning: {failures} sample(s) hit a solver failure", file=sys.stderr)
        if args.strict:
            return EXIT_SOLVER
    return EXIT_OK


def _cmd_best(args) -> int:
    cfg = load_config(args.config)
    for spec in cfg.problems:
        choice = find_best(cfg, spec.problem)
        tag = f"[{spec.label}] " if spec.label else ""
        sigma = "" if choice.sigma is None else f" sigma={choice.sigma:.6g}"
        print(f"{tag}best: {choice.method} tau={choice.tau:.6g}{sigma} rate={choice.rate:.6g}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    for spec in cfg.problems:
        head = f"problem {spec.label}" if spec.label else "problem"
        print(f"[{head}] {spec.structure} {spec.problem}")
        for kind in cfg.methods:
            region = admissible_step_range(kind, spec.problem)
            ok = 0
            for tau in cfg.taus:
                sigma = cfg.sigma_for(kind, float(tau), spec.problem)
                if sigma is not None and sigma <= 0:
                    continue
                if validate(MethodSpec(kind, float(tau), sigma, cfg.k_steps), spec.problem) is None:
                    ok += 1
            rng = region.tau_interval if isinstance(region, PairRegion) else region
            extra = f"; {region}" if isinstance(region, PairRegion) else ""
            print(f"  {kind}: tau in {rng}{extra}; {ok}/{len(cfg.taus)} grid points admissible")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pepsplit", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="compute rate curves and write CSV/SVG")
    p.add_argument("--config", required=True, help="config file or preset name")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", default="csv", help="comma list of csv, svg")
    p.add_argument("--strict", action="store_true", help="exit 2 if any solve failed")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("best", help="fastest (method, tau) by PEP rate")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_best)

    p = sub.add_parser("validate", help="check a config and report admissible step sizes")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
