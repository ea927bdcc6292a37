#!/usr/bin/env python3
"""Storage/recall maps for abrupt vs tanh gradient switching.

Runs the two packaged presets, dumps the |E| / |alpha| space-time maps and
the k-space normal-mode maps, and prints the headline scalars.
"""

import argparse
import sys

from gemsim.cli import main as gemsim_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out", help="artifact root directory")
    args = parser.parse_args()
    status = 0
    for preset in ("fig2_abrupt", "fig2_tanh"):
        status |= gemsim_main(["--out", args.out, "--dump-fields",
                               "presets", "run", preset])
    return status


if __name__ == "__main__":
    sys.exit(main())
