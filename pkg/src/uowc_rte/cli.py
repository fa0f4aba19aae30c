"""Command-line entry point: ``uowc-rte --mode ti --preset harbor-II --plot``."""
from __future__ import annotations

import argparse
import logging
import sys

from .montecarlo import MCStatisticalError
from .scenario import MODES, PSF_DEFAULTS, ConfigError, load_config, run
from .solver import DivergenceError, InstabilityError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_MC = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="uowc-rte", description="2-D radiative transfer solver for underwater optical links")
    p.add_argument("--config", metavar="PATH", help="YAML/JSON scenario or a previous run manifest")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--preset", metavar="NAME", help="water preset (harbor-I, harbor-II)")
    p.add_argument("--psf", choices=sorted(PSF_DEFAULTS))
    p.add_argument("--scheme", type=int, choices=(3, 5, 7))
    p.add_argument("--M", type=int, dest="M")
    p.add_argument("--K", type=int, dest="K")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--plot", action="store_true")
    p.add_argument("--allow-unstable", action="store_true")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _overrides(args) -> dict:
    o = {}
    if args.mode:
        o["mode"] = args.mode
    if args.preset:
        o["water"] = {"preset": args.preset}
    if args.psf:
        o["phase.variant"] = args.psf
        o["phase.params"] = None
    if args.scheme is not None:
        o["quadrature.scheme"] = args.scheme
        o["quadrature.sweep"] = None
    if args.M is not None:
        o["quadrature.M"] = args.M
        o["quadrature.sweep"] = None
    if args.K is not None:
        o["K"] = args.K
    if args.seed is not None:
        o["seed"] = args.seed
    if args.out:
        o["output.dir"] = args.out
    if args.plot:
        o["output.plot"] = True
    if args.allow_unstable:
        o["solver.allow_unstable"] = True
    return o


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, **_overrides(args))
        result = run(cfg)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except MCStatisticalError as err:
        print(f"monte carlo error: {err}", file=sys.stderr)
        return EXIT_MC
    except (InstabilityError, DivergenceError, FloatingPointError) as err:
        print(f"numerical error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    for name in result.files:
        print(result.out_dir / name)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
