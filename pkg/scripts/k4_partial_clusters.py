#!/usr/bin/env python3
"""Where does NOMA-R lose sum EC to full NOMA?  Per-SNR breakdown for K users.

For each SNR the script prints the sum EC of OMA, NOMA and NOMA-R (event
selection), the fraction of realizations in which the full cluster passes the
NOMA criterion, the fraction with at least one cluster, and the most frequent
partial partitions.  With the default four-user setup NOMA-R falls below
NOMA around 30-35 dB: the full cluster is often infeasible there, and the
partial clusters that replace it give the weak users only |S|/K of the
resources.
"""

import argparse
import math

import numpy as np

from nomar_ec.channel import block_rng, sample_gain_matrix
from nomar_ec.closed_form import NOMA, NOMAR_EVENT, OMA
from nomar_ec.config import DEFAULT_POWERS, db_to_linear
from nomar_ec.monte_carlo import simulate
from nomar_ec.rate_model import NetworkConfig, feasible_partitions, select_clusters_batch


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--k", type=int, default=4, choices=sorted(DEFAULT_POWERS))
    ap.add_argument("--snr-db", type=float, nargs="+", default=[20, 25, 30, 35, 40, 45])
    ap.add_argument("--samples", type=int, default=10**6)
    ap.add_argument("--seed", type=int, default=9)
    args = ap.parse_args()

    k = args.k
    parts = feasible_partitions(k)
    full = next(i for i, a in enumerate(parts) if a.clusters == (tuple(range(k)),))
    print(f"{'dB':>5} {'OMA':>8} {'NOMA':>8} {'NOMA-R':>8} {'gap/SE':>7} {'P(full)':>8} {'P(any)':>7}  top partial splits")
    for db in args.snr_db:
        cfg = NetworkConfig(k, DEFAULT_POWERS[k], db_to_linear(db))
        sim = simulate(cfg, [OMA, NOMA, NOMAR_EVENT], args.samples, args.seed)
        o, n, r = (sim.sum_ec(s, k) for s in (OMA, NOMA, NOMAR_EVENT))
        gap = (r.value - n.value) / math.hypot(r.std_err, n.std_err)
        g = sample_gain_matrix(min(args.samples, 2**18), k, block_rng(args.seed, 0))
        choice = select_clusters_batch(g, cfg)
        idx, counts = np.unique(choice, return_counts=True)
        order = np.argsort(-counts)
        top = [(parts[idx[j]], counts[j] / g.shape[0]) for j in order if idx[j] != full][:3]
        desc = "; ".join(f"{[tuple(u + 1 for u in c) for c in a.clusters]} {p:.1%}" for a, p in top)
        print(f"{db:5.0f} {o.value:8.4f} {n.value:8.4f} {r.value:8.4f} {gap:7.1f} "
              f"{np.mean(choice == full):8.4f} {sim.noma_frequency.value:7.4f}  {desc}")


if __name__ == "__main__":
    main()
