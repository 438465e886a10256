"""Summarise trace CSVs written by ``bench``: effective vs visited branch counts.

    python scripts/trace_summary.py runs/grid/traces/*.csv
"""

import csv
import sys

import numpy as np


def main(paths):
    print(f"{'trace':55s} {'rows':>6s} {'|T| mean':>9s} {'|T| max':>8s} {'visited':>8s} {'final gap':>10s}")
    for p in paths:
        with open(p, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            continue
        eff = np.array([int(r["n_effective_branches"]) for r in rows])
        print(f"{p.rsplit('/', 1)[-1]:55s} {len(rows):6d} {eff.mean():9.1f} {eff.max():8d} "
              f"{int(rows[-1]['n_visited_branches']):8d} {float(rows[-1]['gap']):10.2e}")


if __name__ == "__main__":
    main(sys.argv[1:])
