"""Run every shipped preset and write CSV and SVG files.

    python3 scripts/reproduce_figures.py [--out figures] [--workers 4] [fig1a fig2 ...]
"""

import argparse
import sys
import time

from pepsplit.emit import emit
from pepsplit.harness import PRESET_DIR, failed_samples, load_config, sweep


def main(argv=None):
    presets = sorted(p.stem for p in PRESET_DIR.glob("*.cfg"))
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("names", nargs="*", default=presets, help=f"subset of {presets}")
    ap.add_argument("--out", default="figures")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)

    failures = 0
    for name in args.names:
        start = time.perf_counter()
        cfg = load_config(name)
        curves = sweep(cfg, workers=args.workers)
        paths = emit(curves, args.out, cfg.name, ("csv", "svg"), cfg.axis)
        bad = failed_samples(curves)
        failures += bad
        print(f"{name}: {len(curves)} curves, {bad} solver failures, "
              f"{time.perf_counter() - start:.1f}s -> {', '.join(p.name for p in paths)}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
