"""Grid scans of the tau_min family over (x0, x1, x2)."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bell import facet4_closed_max_grid
from .entdetect import conditions_grid
from .steering import appendix_b_grid

COLUMNS = ("x0", "x1", "x2", "x3", "cond1", "cond2", "s1", "s2", "s3",
           "pge_max", "pe_max", "ps_max", "facet4_min")
BOOL_COLUMNS = frozenset({"cond1", "cond2", "pge_max", "pe_max", "ps_max"})
RADICAND_TOL = 1e-12


class ScanError(ValueError):
    pass


class EmptyScanError(ScanError):
    pass


@dataclass(frozen=True)
class ScanConfig:
    points: int = 101
    lo: float = -1.0
    hi: float = 1.0
    both_signs: bool = False
    workers: int | None = None


def evaluate_points(x0, x1, x2, x3) -> dict:
    """All scan columns for arbitrary coordinate arrays."""
    cols = {"x0": x0, "x1": x1, "x2": x2, "x3": x3}
    cond = conditions_grid(x0, x1, x2, x3)
    for key in ("cond1", "cond2", "s1", "s2", "s3", "pge_max", "pe_max"):
        cols[key] = cond[key]
    b = appendix_b_grid(x0, x1, x2, x3)
    cols["ps_max"] = (b[0] > 0) & (b[1] > 0) & (b[2] > 0)
    cols["facet4_min"] = facet4_closed_max_grid(x0, x1, x2, x3)
    return cols


def _slab(x0_value, axis, both_signs):
    x1, x2 = np.meshgrid(axis, axis, indexing="ij")
    x1, x2 = x1.ravel(), x2.ravel()
    x0 = np.full_like(x1, x0_value)
    rad = 1 - x0**2 - x1**2 - x2**2
    ok = rad >= -RADICAND_TOL
    x0, x1, x2 = x0[ok], x1[ok], x2[ok]
    x3 = np.sqrt(np.clip(rad[ok], 0, None))
    if both_signs:
        neg = x3 > 0
        x0, x1, x2 = (np.concatenate([v, v[neg]]) for v in (x0, x1, x2))
        x3 = np.concatenate([x3, -x3[neg]])
        # lexicographic in (x1, x2, x3) within the slab
        order = np.lexsort((x3, x2, x1))
        x0, x1, x2, x3 = x0[order], x1[order], x2[order], x3[order]
    return evaluate_points(x0, x1, x2, x3)


def _workers(cfg: ScanConfig) -> int:
    if cfg.workers is not None:
        return max(1, cfg.workers)
    env = os.environ.get("CORRSIST_THREADS")
    return max(1, int(env)) if env else min(8, os.cpu_count() or 1)


def scan_tau_min(cfg: ScanConfig = ScanConfig()) -> dict:
    """Column arrays for every feasible grid point, rows in lexicographic order.

    x3 takes the nonnegative root; ``both_signs`` adds the x3 < 0 sheet.
    """
    if cfg.points < 2:
        raise ScanError("need at least two grid points per axis")
    if not -1 <= cfg.lo < cfg.hi <= 1:
        raise ScanError("range must satisfy -1 <= lo < hi <= 1")
    axis = np.linspace(cfg.lo, cfg.hi, cfg.points)
    with ThreadPoolExecutor(max_workers=_workers(cfg)) as pool:
        slabs = list(pool.map(lambda v: _slab(v, axis, cfg.both_signs), axis))
    out = {c: np.concatenate([s[c] for s in slabs]) for c in COLUMNS}
    if out["x0"].size == 0:
        raise EmptyScanError("no feasible grid points in range")
    return out


def _format_column(name, values) -> list[str]:
    if name in BOOL_COLUMNS:
        return ["1" if v else "0" for v in values]
    # +0.0 folds negative zero
    return [f"{v + 0.0:.9g}" for v in values]


def write_csv(cols: dict, path_or_file) -> int:
    formatted = [_format_column(c, cols[c]) for c in COLUMNS]
    lines = [",".join(COLUMNS)]
    lines.extend(",".join(row) for row in zip(*formatted))
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w", newline="") as fh:
            fh.write(text)
    return len(lines) - 1


def region_counts(cols: dict) -> dict:
    return {k: int(np.sum(cols[k])) for k in ("pge_max", "pe_max", "ps_max")}
