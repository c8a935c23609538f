"""Write the tau_min grid scan to CSV and print region sizes per slice of x0."""

import argparse
import json

import numpy as np

from corrsist.scan import ScanConfig, region_counts, scan_tau_min, write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=101)
    ap.add_argument("--out", default="tau_min_scan.csv")
    ap.add_argument("--both-signs", action="store_true")
    ap.add_argument("--workers", type=int)
    args = ap.parse_args()

    cols = scan_tau_min(ScanConfig(points=args.points, both_signs=args.both_signs, workers=args.workers))
    rows = write_csv(cols, args.out)
    print(json.dumps({"rows": rows, "out": args.out, **region_counts(cols)}))

    # coarse profile of each region along x0
    for x0 in np.unique(cols["x0"])[:: max(1, args.points // 10)]:
        sel = cols["x0"] == x0
        counts = {k: int(np.sum(cols[k][sel])) for k in ("pge_max", "pe_max", "ps_max")}
        print(f"x0={x0:+.2f} points={int(sel.sum()):6d} " + " ".join(f"{k}={v}" for k, v in counts.items()))


if __name__ == "__main__":
    main()
