"""Persistency of correlations under particle loss, reported as certified intervals.

For k = 1, 2, ... every k-subset of qubits is traced out and the reduction is
handed to a detector for the requested property. All reductions detected
raises the lower bound to k + 1; a reduction with a certificate of absence
fixes the upper bound at k; anything inconclusive leaves the upper bound
uncertified.
"""

from __future__ import annotations

import enum
import hashlib
import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bell, entdetect, steering
from .entdetect import ABSENT, DETECTED, UNDETECTED, DetectionOutcome
from .families import TauMinCoords
from .qstate import (
    LocalFilter,
    MeasurementBattery,
    StateError,
    apply_filter,
    as_matrix,
    bloch_and_T,
    min_pt_eigenvalue,
    n_qubits_of,
    partial_trace,
)

UNCERTIFIED = "uncertified"
SYMMETRY_TOL = 1e-12


class PersistencyError(ValueError):
    pass


class PropertyKind(str, enum.Enum):
    E = "E"
    GE = "GE"
    S = "S"
    GS = "GS"
    NL = "NL"
    GNL = "GNL"
    HNL = "HNL"
    HGNL = "HGNL"


@dataclass(frozen=True)
class PersistencyOptions:
    batteries: int = 20
    restarts: int = 16
    seed: int = 0
    eps_resolution: float = 1e-4
    steering_criteria: tuple | None = None
    tau_min: TauMinCoords | None = None
    workers: int | None = None
    use_symmetry: bool = True


@dataclass(frozen=True)
class PersistencyReport:
    kind: PropertyKind
    n_qubits: int
    lower: int
    upper: object  # int or "uncertified"
    witness_per_k: dict = field(default_factory=dict)
    fingerprint: str = ""
    note: str = ""

    @property
    def upper_certified(self) -> bool:
        return self.upper != UNCERTIFIED

    def as_dict(self):
        return {
            "kind": self.kind.value,
            "n_qubits": self.n_qubits,
            "lower": self.lower,
            "upper": self.upper,
            "note": self.note,
            "witness_per_k": {
                str(k): [{"lost": list(s), **o.as_dict()} for s, o in rows]
                for k, rows in self.witness_per_k.items()
            },
        }


def fingerprint(rho) -> str:
    m = np.round(as_matrix(rho), 10) + 0.0
    return hashlib.sha1(m.tobytes()).hexdigest()[:16]


# ---------------------------------------------------------------- certificates

def _separable_2q(m):
    ev = min_pt_eigenvalue(m, [1])
    if ev >= -entdetect.PPT_CERT_TOL:
        return DetectionOutcome(ABSENT, f"PPT two-qubit state is separable (min eigenvalue {ev:.3g})")
    return None


def _fully_separable(m):
    if entdetect.is_diagonal(m):
        return DetectionOutcome(ABSENT, "diagonal in the computational product basis")
    if entdetect.is_fully_product(m):
        return DetectionOutcome(ABSENT, "product of single-qubit states")
    return None


def _biseparable_3q(m):
    if entdetect.is_diagonal(m):
        return DetectionOutcome(ABSENT, "diagonal in the computational product basis")
    for q in (1, 2, 3):
        if entdetect.factorizes(m, [q]):
            return DetectionOutcome(ABSENT, f"qubit {q} factorizes from the rest")
    return None


# ---------------------------------------------------------------- detectors per kind

def _detect_e(m, ctx):
    n = n_qubits_of(m)
    if n == 2:
        return entdetect.detect_entanglement_2q(m)
    if n == 3:
        return entdetect.detect_entanglement_3q(m)
    for r in range(1, n // 2 + 1):
        for cut in itertools.combinations(range(1, n + 1), r):
            ev = min_pt_eigenvalue(m, cut)
            if ev < -entdetect.NPT_TOL:
                return DetectionOutcome(DETECTED, f"NPT across {list(cut)} (min eigenvalue {ev:.6g})")
    return _fully_separable(m) or DetectionOutcome(UNDETECTED, "PPT across every cut")


def _detect_ge(m, ctx):
    n = n_qubits_of(m)
    if n == 2:
        return entdetect.detect_entanglement_2q(m)
    if n == 3:
        return entdetect.detect_ge_3q(m)
    raise PersistencyError(f"no genuine-entanglement detector for {n} qubits")


def _steer_outcome(v: steering.SteeringVerdict) -> DetectionOutcome:
    return DetectionOutcome(v.verdict, f"{v.criterion} margin {v.value:.6g}")


def _detect_s(m, ctx):
    n = n_qubits_of(m)
    if n == 2:
        v = steering.detect_steering_2q(m, ctx.options.steering_criteria)
        if v.detected:
            return _steer_outcome(v)
        return _separable_2q(m) or _steer_outcome(v)
    if n == 3:
        # steering of any two-qubit marginal survives in the larger state
        best = None
        for lost in (1, 2, 3):
            v = steering.detect_steering_2q(partial_trace(m, [lost]), ctx.options.steering_criteria)
            if v.detected:
                return DetectionOutcome(DETECTED, f"marginal without qubit {lost}: {v.criterion} margin {v.value:.6g}")
            best = v
        g = steering.detect_genuine_steering(m, ctx.options.restarts, ctx.seed)
        if g.detected:
            return _steer_outcome(g)
        return _fully_separable(m) or _steer_outcome(best)
    raise PersistencyError(f"no steering detector for {n} qubits")


def _detect_gs(m, ctx):
    n = n_qubits_of(m)
    if n == 2:
        return _detect_s(m, ctx)
    if n == 3:
        v = steering.detect_genuine_steering(m, ctx.options.restarts, ctx.seed)
        if v.detected:
            return _steer_outcome(v)
        return _biseparable_3q(m) or _steer_outcome(v)
    raise PersistencyError(f"no genuine-steering detector for {n} qubits")


def _chsh_max(m) -> float:
    _, _, T = bloch_and_T(m)
    s = np.sort(np.linalg.eigvalsh(T.T @ T))[::-1]
    return float(2 * np.sqrt(max(s[0] + s[1], 0.0)))


def _detect_nl_2q(m):
    value = _chsh_max(m)
    if value > 2 + bell.LP_TOL:
        return DetectionOutcome(DETECTED, f"CHSH maximum {value:.6g} > 2")
    return _separable_2q(m) or DetectionOutcome(UNDETECTED, f"CHSH maximum {value:.6g} <= 2")


def _candidate_batteries(m, ctx):
    rng = np.random.default_rng([ctx.seed, 1])
    out = [MeasurementBattery.random(3, 2, rng) for _ in range(ctx.options.batteries)]
    for name in ("facet4", "b16"):
        _, battery = bell.maximize_bell(bell.builtin_inequality(name), m, ctx.options.restarts, ctx.seed)
        out.append(battery)
    return out


def _detect_behaviors(m, ctx, member, label):
    for i, battery in enumerate(_candidate_batteries(m, ctx)):
        if member(bell.behavior(m, battery)) == "Outside":
            return DetectionOutcome(DETECTED, f"battery {i} behavior outside the {label} polytope")
    return None


def _detect_nl(m, ctx):
    n = n_qubits_of(m)
    if n == 2:
        return _detect_nl_2q(m)
    if n == 3:
        hit = _detect_behaviors(m, ctx, bell.local_membership, "local")
        return hit or _fully_separable(m) or DetectionOutcome(UNDETECTED, "inside the local polytope for all sampled batteries")
    raise PersistencyError(f"no nonlocality detector for {n} qubits")


def _detect_gnl(m, ctx):
    n = n_qubits_of(m)
    if n == 2:
        return _detect_nl_2q(m)
    if n == 3:
        hit = _detect_behaviors(m, ctx, bell.ns2_membership, "NS2")
        return hit or _biseparable_3q(m) or DetectionOutcome(UNDETECTED, "inside the NS2 polytope for all sampled batteries")
    raise PersistencyError(f"no genuine-nonlocality detector for {n} qubits")


def _filter_objective(m, ctx):
    n = n_qubits_of(m)
    if n == 2:
        return lambda r: _chsh_max(r) - 2
    ineq = bell.builtin_inequality("b16")
    restarts = max(2, ctx.options.restarts // 4)
    return lambda r: bell.maximize_bell(ineq, r, restarts, ctx.seed)[0] - ineq.bound


def best_shared_filter(m, objective, resolution=1e-4):
    """Golden-section search for the shared diag(eps, 1) filter maximizing ``objective``."""
    n = n_qubits_of(m)

    def f(eps):
        try:
            filtered, _ = apply_filter(m, LocalFilter.diag_eps(eps, n))
        except StateError:
            return -np.inf
        return objective(filtered)

    lo, hi = resolution, 1.0
    g = (np.sqrt(5) - 1) / 2
    a, b = hi - g * (hi - lo), lo + g * (hi - lo)
    fa, fb = f(a), f(b)
    while hi - lo > resolution:
        if fa >= fb:
            hi, b, fb = b, a, fa
            a = hi - g * (hi - lo)
            fa = f(a)
        else:
            lo, a, fa = a, b, fb
            b = lo + g * (hi - lo)
            fb = f(b)
    candidates = [(f(lo), lo), (fa, a), (fb, b), (f(hi), hi), (f(1.0), 1.0)]
    value, eps = max(candidates)
    return float(eps), float(value)


def _hidden(base, certificate):
    def detect(m, ctx):
        # local filters map separable (biseparable) states to separable (biseparable) ones
        cert = certificate(m)
        if cert is not None:
            return cert
        eps, _ = best_shared_filter(m, _filter_objective(m, ctx), ctx.options.eps_resolution)
        filtered, prob = apply_filter(m, LocalFilter.diag_eps(eps, n_qubits_of(m)))
        out = base(filtered, ctx)
        if out.verdict == DETECTED:
            return DetectionOutcome(DETECTED, f"after diag({eps:.4g}, 1) filter (success {prob:.3g}): {out.evidence}")
        return DetectionOutcome(UNDETECTED, f"best filter eps {eps:.4g}: {out.evidence}")
    return detect


def _cert_local(m):
    return _separable_2q(m) if n_qubits_of(m) == 2 else _fully_separable(m)


def _cert_biseparable(m):
    return _separable_2q(m) if n_qubits_of(m) == 2 else _biseparable_3q(m)


DETECTORS = {
    PropertyKind.E: _detect_e,
    PropertyKind.GE: _detect_ge,
    PropertyKind.S: _detect_s,
    PropertyKind.GS: _detect_gs,
    PropertyKind.NL: _detect_nl,
    PropertyKind.GNL: _detect_gnl,
    PropertyKind.HNL: _hidden(_detect_nl, _cert_local),
    PropertyKind.HGNL: _hidden(_detect_gnl, _cert_biseparable),
}


# ---------------------------------------------------------------- engine

@dataclass(frozen=True)
class _Context:
    options: PersistencyOptions
    seed: int


def detect(rho, kind, options: PersistencyOptions | None = None) -> DetectionOutcome:
    """Run the registered detector for ``kind`` on a single state."""
    options = options or PersistencyOptions()
    return DETECTORS[PropertyKind(kind)](as_matrix(rho), _Context(options, options.seed))


def is_permutation_symmetric(rho, tol=SYMMETRY_TOL) -> bool:
    m = as_matrix(rho)
    n = n_qubits_of(m)
    t = m.reshape([2] * (2 * n))
    for i, j in itertools.combinations(range(n), 2):
        perm = list(range(n))
        perm[i], perm[j] = j, i
        if np.max(np.abs(t.transpose(perm + [n + p for p in perm]) - t)) > tol:
            return False
    return True


def _pool_size(options) -> int:
    if options.workers is not None:
        return max(1, options.workers)
    env = os.environ.get("CORRSIST_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _fast_path(c: TauMinCoords, kind, n):
    flags = entdetect.cond_max_persistency(c)
    key = {PropertyKind.GE: "pge_max", PropertyKind.E: "pe_max"}.get(kind)
    if key and flags[key]:
        return n - 1
    return None


def persistency_bounds(rho, kind, options: PersistencyOptions | None = None) -> PersistencyReport:
    options = options or PersistencyOptions()
    kind = PropertyKind(kind)
    m = as_matrix(rho)
    n = n_qubits_of(m)
    if n < 2:
        raise PersistencyError("persistency needs at least two qubits")
    fp = fingerprint(m)

    if options.tau_min is not None and n == 4:
        top = _fast_path(options.tau_min, kind, n)
        if top is not None:
            return PersistencyReport(kind, n, top, top, {}, fp, "closed-form tau_min condition (fast path)")

    detector = DETECTORS[kind]
    symmetric = options.use_symmetry and is_permutation_symmetric(m)
    lower, upper, witnesses = 1, UNCERTIFIED, {}
    with ThreadPoolExecutor(max_workers=_pool_size(options)) as pool:
        for k in range(1, n - 1):
            subsets = list(itertools.combinations(range(1, n + 1), k))
            todo = subsets[:1] if symmetric else subsets
            jobs = [
                pool.submit(detector, partial_trace(m, s), _Context(options, options.seed + 1000 * k + i))
                for i, s in enumerate(todo)
            ]
            outcomes = [j.result() for j in jobs]
            if symmetric:
                outcomes = outcomes * len(subsets)
            rows = list(zip(subsets, outcomes))
            witnesses[k] = rows
            verdicts = [o.verdict for o in outcomes]
            if ABSENT in verdicts:
                upper = k
                break
            if all(v == DETECTED for v in verdicts):
                lower = k + 1
                continue
            break
        else:
            # every reduction down to two qubits detected; losing n-1 leaves one qubit
            upper = n - 1
    note = "symmetric state: one subset per size evaluated" if symmetric else ""
    return PersistencyReport(kind, n, lower, upper, witnesses, fp, note)


# weaker property first: P(weaker) >= P(stronger)
HIERARCHY = (
    ("E", "S"), ("S", "NL"), ("E", "NL"),
    ("GE", "GS"), ("GS", "GNL"), ("GE", "GNL"),
    ("E", "GE"), ("S", "GS"), ("NL", "GNL"),
    ("HNL", "NL"), ("E", "HNL"), ("HGNL", "GNL"), ("GE", "HGNL"), ("HNL", "HGNL"),
)


def hierarchy_validate(reports) -> list[str]:
    """Pairs where a certified upper bound of a weaker property sits below a stronger one's lower bound."""
    reports = list(reports)
    if len({r.fingerprint for r in reports}) > 1:
        raise PersistencyError("reports refer to different states")
    by_kind = {r.kind.value: r for r in reports}
    out = []
    for weak, strong in HIERARCHY:
        if weak in by_kind and strong in by_kind:
            w, s = by_kind[weak], by_kind[strong]
            if w.upper_certified and w.upper < s.lower:
                out.append(f"upper(P_{weak}) = {w.upper} < lower(P_{strong}) = {s.lower}")
    return out
