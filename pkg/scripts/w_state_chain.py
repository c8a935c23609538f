"""Persistency bounds of every property for W states of growing size.

Also evaluates the filtered B16 chain on the three-qubit reduction
rho(3/N) for a few filter strengths.
"""

import argparse
import time

from corrsist.bell import b16_filtered_formula
from corrsist.families import w_state
from corrsist.persistency import (
    PersistencyError,
    PersistencyOptions,
    PropertyKind,
    hierarchy_validate,
    persistency_bounds,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[4])
    ap.add_argument("--kinds", nargs="+", default=[k.value for k in PropertyKind])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    opts = PersistencyOptions(seed=args.seed)
    for n in args.sizes:
        reports = []
        for kind in args.kinds:
            t0 = time.perf_counter()
            try:
                rep = persistency_bounds(w_state(n), kind, opts)
            except PersistencyError as exc:
                print(f"W{n} P_{kind:<4} not available: {exc}")
                continue
            reports.append(rep)
            print(f"W{n} P_{kind:<4} in [{rep.lower}, {rep.upper}]  {time.perf_counter() - t0:6.2f} s  {rep.note}")
        for issue in hierarchy_validate(reports):
            print(f"  hierarchy: {issue}")
        p = 3 / n
        for eps in (0.1, 0.01, 1e-3):
            print(f"  B16 on filtered rho({p:.3g}), eps={eps:g}: {b16_filtered_formula(p, eps):.6f}")


if __name__ == "__main__":
    main()
