"""Command line entry point: pick an adapter set and an endpoint."""

from __future__ import annotations

import argparse
import logging
import sys

from .adapters import ADAPTER_SETS
from .server import serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tracksentry-bridge",
        description="Serve segmenter/matcher/estimator adapters over the "
                    "length-prefixed JSON wire protocol.")
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--listen", metavar="HOST:PORT",
                       help="serve over TCP on this endpoint")
    group.add_argument("--stdio", action="store_true",
                       help="serve one connection over stdin/stdout")
    parser.add_argument("--adapters", default="fake",
                        choices=sorted(ADAPTER_SETS),
                        help="adapter set to register (default: fake)")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)

    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    serve(ADAPTER_SETS[args.adapters](),
          None if args.stdio else args.listen)
    return 0


if __name__ == "__main__":
    sys.exit(main())
