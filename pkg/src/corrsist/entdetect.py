"""Entanglement and genuine-entanglement detection.

Closed-form tau_min conditions plus generic detectors on reduced states.
Detectors are sufficient only: ``Detected`` proves the property,
``CertifiedAbsent`` carries an explicit separability argument, anything
else is ``Undetected``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .families import TauMinCoords
from .qstate import (
    NPT_TOL,
    SX,
    StateError,
    as_matrix,
    kron_all,
    min_pt_eigenvalue,
    n_qubits_of,
    partial_trace,
    partial_transpose,
    ppt_check,
)

DETECTED = "Detected"
UNDETECTED = "Undetected"
ABSENT = "CertifiedAbsent"

PPT_CERT_TOL = 1e-12
WITNESS_MARGIN = 1e-10


@dataclass(frozen=True)
class DetectionOutcome:
    verdict: str
    evidence: str

    @property
    def detected(self) -> bool:
        return self.verdict == DETECTED

    def as_dict(self):
        return {"verdict": self.verdict, "evidence": self.evidence}


@dataclass(frozen=True)
class SValues:
    s1: float
    s2: float
    s3: float

    def all_positive(self) -> bool:
        return self.s1 > 0 and self.s2 > 0 and self.s3 > 0


# ---------------------------------------------------------------- closed forms

def _minmax(x):
    x0, x1, x2, x3 = x
    return min(abs(x0), abs(x1)) * max(abs(x2), abs(x3))


def cond_persist_ge(c: TauMinCoords) -> bool:
    x0, x1, x2, x3 = c.x
    lhs = 2 * abs(x2**2 - x3**2)
    rhs = 2 * (x2**2 + x3**2) + (x0 + x1) ** 2 + 2 * (x0**2 - x1**2) - 8 * _minmax(c.x)
    return lhs > rhs


def cond_persist_e(c: TauMinCoords) -> bool:
    x0, x1, x2, x3 = c.x
    lhs = abs(x2**2 - x3**2)
    # sgn(0) counts as +1
    sign = -1 if x0 * x1 < 0 else 1
    return lhs > (x0**2 - x1**2) + sign * 4 * _minmax(c.x)


def s_values(c: TauMinCoords) -> SValues:
    x0, x1, x2, x3 = c.x
    s1 = 2 * max(
        abs(-0.5 * (x0 + x1) * (-x2 + x3)) - 0.25 * ((x0 - x1) ** 2 + (x2 + x3) ** 2),
        abs(0.5 * (x0 - x1) * (x2 + x3)) - 0.25 * ((x0 + x1) ** 2 + (x2 - x3) ** 2),
    )
    s2 = 2 * max(
        abs(0.5 * (x0 + x1) * (x2 + x3)) - 0.25 * ((x0 - x1) ** 2 + (x2 - x3) ** 2),
        abs(-0.5 * (x0 - x1) * (-x2 + x3)) - 0.25 * ((x0 + x1) ** 2 + (x2 + x3) ** 2),
    )
    s3 = 2 * max(
        abs(0.5 * (x2 + x3) * (x2 - x3)) - 0.25 * ((x0 - x1) ** 2 + (x0 + x1) ** 2),
        abs(0.5 * (x0 + x1) * (x0 - x1)) - 0.25 * ((x2 + x3) ** 2 + (x2 - x3) ** 2),
    )
    return SValues(float(s1), float(s2), float(s3))


def cond_max_persistency(c: TauMinCoords) -> dict:
    s_ok = s_values(c).all_positive()
    return {"pge_max": cond_persist_ge(c) and s_ok, "pe_max": s_ok}


def conditions_grid(x0, x1, x2, x3) -> dict:
    """Vectorized Conditions 1-4 and S values over coordinate arrays."""
    x0, x1, x2, x3 = (np.asarray(v, dtype=float) for v in (x0, x1, x2, x3))
    mm = np.minimum(abs(x0), abs(x1)) * np.maximum(abs(x2), abs(x3))
    cond1 = 2 * abs(x2**2 - x3**2) > 2 * (x2**2 + x3**2) + (x0 + x1) ** 2 + 2 * (x0**2 - x1**2) - 8 * mm
    sign = np.where(x0 * x1 < 0, -1.0, 1.0)
    cond2 = abs(x2**2 - x3**2) > (x0**2 - x1**2) + sign * 4 * mm
    s1 = 2 * np.maximum(
        abs(-0.5 * (x0 + x1) * (-x2 + x3)) - 0.25 * ((x0 - x1) ** 2 + (x2 + x3) ** 2),
        abs(0.5 * (x0 - x1) * (x2 + x3)) - 0.25 * ((x0 + x1) ** 2 + (x2 - x3) ** 2),
    )
    s2 = 2 * np.maximum(
        abs(0.5 * (x0 + x1) * (x2 + x3)) - 0.25 * ((x0 - x1) ** 2 + (x2 - x3) ** 2),
        abs(-0.5 * (x0 - x1) * (-x2 + x3)) - 0.25 * ((x0 + x1) ** 2 + (x2 + x3) ** 2),
    )
    s3 = 2 * np.maximum(
        abs(0.5 * (x2 + x3) * (x2 - x3)) - 0.25 * ((x0 - x1) ** 2 + (x0 + x1) ** 2),
        abs(0.5 * (x0 + x1) * (x0 - x1)) - 0.25 * ((x2 + x3) ** 2 + (x2 - x3) ** 2),
    )
    s_ok = (s1 > 0) & (s2 > 0) & (s3 > 0)
    return {"cond1": cond1, "cond2": cond2, "s1": s1, "s2": s2, "s3": s3,
            "pge_max": cond1 & s_ok, "pe_max": s_ok}


# ---------------------------------------------------------------- PPT

def one_vs_rest_cuts(n: int):
    return [(q,) for q in range(1, n + 1)]


# ---------------------------------------------------------------- certificates

def is_diagonal(rho, tol=1e-12) -> bool:
    m = as_matrix(rho)
    return bool(np.max(np.abs(m - np.diag(np.diag(m)))) <= tol)


def factorizes(rho, keep, tol=1e-10) -> bool:
    """True when rho equals rho_keep (x) rho_rest up to qubit order."""
    m = as_matrix(rho)
    n = n_qubits_of(m)
    keep = sorted(keep)
    rest = [q for q in range(1, n + 1) if q not in keep]
    a = partial_trace(m, rest)
    b = partial_trace(m, keep)
    prod = np.kron(a, b).reshape([2] * (2 * n))
    order = keep + rest
    # prod axes are in (keep, rest) order; map back to 1..n
    perm = [order.index(q) for q in range(1, n + 1)]
    prod = prod.transpose(perm + [n + p for p in perm]).reshape(m.shape)
    return bool(np.max(np.abs(prod - m)) <= tol)


def is_fully_product(rho, tol=1e-10) -> bool:
    n = n_qubits_of(rho)
    m = as_matrix(rho)
    singles = [partial_trace(m, [q for q in range(1, n + 1) if q != k]) for k in range(1, n + 1)]
    return bool(np.max(np.abs(kron_all(singles) - m)) <= tol)


# ---------------------------------------------------------------- detectors

def detect_entanglement_2q(rho) -> DetectionOutcome:
    ev = min_pt_eigenvalue(rho, [1])
    if ev < -NPT_TOL:
        return DetectionOutcome(DETECTED, f"NPT, min partial-transpose eigenvalue {ev:.6g}")
    if ev >= -PPT_CERT_TOL:
        return DetectionOutcome(ABSENT, f"PPT two-qubit state is separable (min eigenvalue {ev:.3g})")
    return DetectionOutcome(UNDETECTED, f"PT eigenvalue {ev:.3g} within tolerance band")


def detect_entanglement_3q(rho) -> DetectionOutcome:
    if n_qubits_of(rho) != 3:
        raise StateError("detect_entanglement_3q needs three qubits")
    for cut in one_vs_rest_cuts(3):
        ev = min_pt_eigenvalue(rho, cut)
        if ev < -NPT_TOL:
            return DetectionOutcome(DETECTED, f"NPT across qubit {cut[0]} (min eigenvalue {ev:.6g})")
    if is_diagonal(rho):
        return DetectionOutcome(ABSENT, "diagonal in the computational product basis")
    if is_fully_product(rho):
        return DetectionOutcome(ABSENT, "product of single-qubit states")
    return DetectionOutcome(UNDETECTED, "PPT across every cut, no separable decomposition found")


_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_SDG = np.diag([1, -1j])
# one representative per way of permuting the Pauli axes; sign flips are
# covered separately by the bit-flip variants
_FRAMES = (np.eye(2, dtype=complex), _H, _H @ _SDG, _SDG.conj() @ _H, _H @ _SDG @ _H, _SDG.conj())


def _frame_unitaries(frames) -> np.ndarray:
    singles = [g @ f for f in frames for g in (np.eye(2), SX)]
    return np.array([kron_all(c) for c in itertools.product(singles, repeat=3)])


_ALL_FRAMES = _frame_unitaries(_FRAMES)
_FLIP_FRAMES = _frame_unitaries(_FRAMES[:1])


def ghz_witness(m: np.ndarray) -> float:
    """|rho_18| - sum sqrt(rho_ii rho_jj) over mirrored pairs; > 0 means GME."""
    d = np.real(np.diag(m)).clip(min=0)
    rhs = np.sqrt(d[1] * d[6]) + np.sqrt(d[2] * d[5]) + np.sqrt(d[3] * d[4])
    return float(abs(m[0, 7]) - rhs)


def w_witness(m: np.ndarray) -> float:
    """Single-excitation coherences against the |000> population; > 0 means GME."""
    d = np.real(np.diag(m)).clip(min=0)
    lhs = abs(m[1, 2]) + abs(m[1, 4]) + abs(m[2, 4])
    rhs = np.sqrt(d[0] * d[3]) + np.sqrt(d[0] * d[5]) + np.sqrt(d[0] * d[6]) + 0.5 * (d[1] + d[2] + d[4])
    return float(lhs - rhs)


def _ghz_batch(r: np.ndarray) -> np.ndarray:
    d = np.real(np.diagonal(r, axis1=1, axis2=2)).clip(min=0)
    rhs = np.sqrt(d[:, 1] * d[:, 6]) + np.sqrt(d[:, 2] * d[:, 5]) + np.sqrt(d[:, 3] * d[:, 4])
    return np.abs(r[:, 0, 7]) - rhs


def _w_batch(r: np.ndarray) -> np.ndarray:
    d = np.real(np.diagonal(r, axis1=1, axis2=2)).clip(min=0)
    lhs = np.abs(r[:, 1, 2]) + np.abs(r[:, 1, 4]) + np.abs(r[:, 2, 4])
    rhs = (np.sqrt(d[:, 0] * d[:, 3]) + np.sqrt(d[:, 0] * d[:, 5]) + np.sqrt(d[:, 0] * d[:, 6])
           + 0.5 * (d[:, 1] + d[:, 2] + d[:, 4]))
    return lhs - rhs


def ge_witness_values(rho, frames: bool = True) -> dict:
    """Largest violation of each criterion over local frames.

    Both inequalities hold for every biseparable state in any local product
    basis, so maximizing over Clifford frames and bit flips stays sound.
    """
    m = as_matrix(rho)
    us = _ALL_FRAMES if frames else _FLIP_FRAMES
    r = us @ m @ us.conj().transpose(0, 2, 1)
    return {"ghz": float(_ghz_batch(r).max()), "w": float(_w_batch(r).max())}


def detect_ge_3q(rho) -> DetectionOutcome:
    if n_qubits_of(rho) != 3:
        raise StateError("detect_ge_3q needs three qubits")
    vals = ge_witness_values(rho)
    name, val = max(vals.items(), key=lambda kv: kv[1])
    if val > WITNESS_MARGIN:
        return DetectionOutcome(DETECTED, f"{name}-type matrix-element criterion violated by {val:.6g}")
    if is_diagonal(rho):
        return DetectionOutcome(ABSENT, "diagonal in the computational product basis")
    for q in (1, 2, 3):
        if factorizes(rho, [q]):
            return DetectionOutcome(ABSENT, f"qubit {q} factorizes from the rest")
    return DetectionOutcome(UNDETECTED, f"no criterion violated (best margin {val:.3g})")
