#!/usr/bin/env python3
"""Sweep the instance-complexity programs over disjoint-sets parameters.

Emits one CSV row per (k, eps) with the allocation-program value, the summed
inverse-gap-squared hardness, and their separation ratio (which grows
linearly in the family size).

    python scripts/lb_sweep.py --ks 2 4 8 16 --epss 0.25 0.5 1.0
"""

import argparse
import csv
import sys

from cpe.instances import disj_sets_instance
from cpe.lower_bounds import best_set_lower_bound, gap_hardness


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--ks", type=int, nargs="+", default=[2, 4, 8, 16])
    parser.add_argument("--epss", type=float, nargs="+", default=[0.25, 0.5])
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    rows = []
    for k in args.ks:
        for eps in args.epss:
            inst = disj_sets_instance(k, eps)
            low = best_set_lower_bound(inst).value
            hard = gap_hardness(inst).value
            rows.append({"k": k, "eps": eps, "low": f"{low:.6g}",
                         "gap_hardness": f"{hard:.6g}", "ratio": f"{low / hard:.6g}"})

    out = open(args.out, "w", newline="") if args.out else sys.stdout
    writer = csv.DictWriter(out, fieldnames=list(rows[0]))
    writer.writeheader()
    writer.writerows(rows)
    if args.out:
        out.close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
