"""Separation exponents of every gallery panel over a range of seeds.

Prints one line per panel with the fraction of seeds under the regular
threshold and over the chaotic one, and optionally writes all values as CSV.
"""

import argparse
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from vortexlab import THRESHOLDS
from vortexlab.gallery import PANELS, panel_exponent, worker_count


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--panels", nargs="*", help="panel keys (default: all)")
    ap.add_argument("--csv", help="write panel,seed,lambda rows here")
    args = ap.parse_args()

    panels = [p for p in PANELS if not args.panels or p.key in args.panels]
    jobs = [(p, s) for p in panels for s in range(args.seeds)]
    with ThreadPoolExecutor(worker_count()) as ex:
        lams = list(ex.map(lambda job: panel_exponent(*job), jobs))

    lo, hi = THRESHOLDS["quasi_periodic_exponent"], THRESHOLDS["chaotic_exponent"]
    rows = []
    for p in panels:
        vals = np.array([lam for (q, _), lam in zip(jobs, lams) if q is p])
        finite = vals[np.isfinite(vals)]
        med = np.median(finite) if len(finite) else float("nan")
        print(
            f"{p.key:14s} {p.expected:22s} regular={np.sum(finite <= lo)}/{len(vals)} "
            f"chaotic={np.sum(finite >= hi)}/{len(vals)} nan={len(vals) - len(finite)} median={med:.3g}"
        )
        rows += [f"{p.key},{s},{float(v)!r}" for s, v in enumerate(vals)]
    if args.csv:
        with open(args.csv, "w", newline="\n") as fh:
            fh.write("panel,seed,lambda\n" + "\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
