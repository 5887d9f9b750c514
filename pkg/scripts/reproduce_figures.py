#!/usr/bin/env python3
"""Write the CSV data and gnuplot scripts behind figures 1-4.

    python scripts/reproduce_figures.py --out figures --samples 1000000 --workers 4
    gnuplot figures/fig2_ec_per_user.gp
"""

import argparse
import logging
import time
from pathlib import Path

from nomar_ec.harness import reproduce_figure

log = logging.getLogger("reproduce_figures")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", type=Path, default=Path("figures"))
    ap.add_argument("--samples", type=int, default=10**6)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--figs", type=int, nargs="+", default=[1, 2, 3, 4], choices=(1, 2, 3, 4))
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    for fig in args.figs:
        t0 = time.perf_counter()
        paths = reproduce_figure(fig, args.out, args.samples, args.seed, args.workers)
        log.info("figure %d: %s (%.1f s)", fig, ", ".join(p.name for p in paths),
                 time.perf_counter() - t0)


if __name__ == "__main__":
    main()
