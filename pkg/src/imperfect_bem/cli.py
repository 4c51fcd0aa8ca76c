"""Command-line entry point: ``imperfect-bem <study> [options]``.

Exit codes: 0 when every check passes, 1 when a check or slope fit fails,
2 for usage, configuration or geometry errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

from .config import load_config
from .errors import ImperfectBEMError
from .studies import STUDIES

log = logging.getLogger("imperfect_bem")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="imperfect-bem", description="Boundary-integral studies of imperfectly bonded inclusions.")
    sub = p.add_subparsers(dest="study", required=True, parser_class=_Parser)
    helps = {
        "verify": "run the operator and solver identity checks",
        "capacitance": "tabulate resistive capacitance matrices over the gamma grid",
        "convergence": "error norms and fitted rates as gamma -> 0",
        "blowup": "two-disk gradient map over (gamma, eps)",
        "solve": "one solve: field dump, constants, far-field table",
    }
    for name in STUDIES:
        s = sub.add_parser(name, help=helps[name])
        s.add_argument("--config", metavar="PATH", help="configuration file (default: shipped default.ini)")
        s.add_argument("--out", metavar="DIR", help="write CSV output to DIR")
        s.add_argument("--threads", type=int, metavar="N", help="worker threads for parameter sweeps")
        s.add_argument("--override", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override one configuration value (repeatable)")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.threads is not None and args.threads < 1:
        print("imperfect-bem: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config, args.override)
        t0 = time.perf_counter()
        result = STUDIES[args.study](cfg, args.threads)
        log.info("%s finished in %.1f s", args.study, time.perf_counter() - t0)
    except ImperfectBEMError as exc:
        print(f"imperfect-bem: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(result.report())
    if args.out:
        for path in result.write(args.out):
            log.info("wrote %s", path)
    return EXIT_OK if result.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
