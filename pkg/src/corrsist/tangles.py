"""Pure-state tangles of four qubits."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .qstate import SY, StateError, kron_all, reduced_keep

LETTERS = "ABCD"


@dataclass(frozen=True)
class TangleSummary:
    tau1: float
    tau2: float
    tau4: float
    per_cut: dict

    def as_dict(self):
        return {"tau1": self.tau1, "tau2": self.tau2, "tau4": self.tau4, "per_cut": dict(self.per_cut)}


def _vector(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=complex)
    if v.ndim != 1:
        raise StateError("tangles are defined for pure states")
    return v


def _n(v) -> int:
    return int(np.log2(v.size))


def bipartite_tangle(psi, cut) -> float:
    """2 (1 - tr rho_cut^2) across ``cut`` versus the rest."""
    v = _vector(psi)
    n = _n(v)
    cut = sorted(set(int(q) for q in cut))
    if not cut or len(cut) >= n or cut[0] < 1 or cut[-1] > n:
        raise StateError(f"invalid cut {cut} for {n} qubits")
    rho = reduced_keep(v, cut)
    purity = np.sum(np.abs(rho) ** 2)
    return float(2 * (1 - purity))


def cut_label(cut) -> str:
    rest = [q for q in range(1, 5) if q not in cut]
    return "".join(LETTERS[q - 1] for q in cut) + "|" + "".join(LETTERS[q - 1] for q in rest)


ONE_CUTS = [(1,), (2,), (3,), (4,)]
TWO_CUTS = [(1, 2), (1, 3), (1, 4)]


def four_tangle(psi) -> float:
    v = _vector(psi)
    if v.size != 16:
        raise StateError("the 4-tangle needs four qubits")
    amp = np.vdot(v, kron_all([SY] * 4) @ v.conj())
    return float(abs(amp) ** 2)


def tau_aggregates(psi) -> TangleSummary:
    v = _vector(psi)
    if v.size != 16:
        raise StateError("tau aggregates need four qubits")
    per_cut = {cut_label(c): bipartite_tangle(v, c) for c in ONE_CUTS + TWO_CUTS}
    tau1 = float(np.mean([per_cut[cut_label(c)] for c in ONE_CUTS]))
    tau2 = float(np.mean([per_cut[cut_label(c)] for c in TWO_CUTS]))
    return TangleSummary(tau1, tau2, four_tangle(v), per_cut)


# samplers for the coordinate families

def random_generic_z(rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=4) + 1j * rng.normal(size=4)
    return z / np.linalg.norm(z)


def random_tau_min_x(rng: np.random.Generator) -> np.ndarray:
    x = rng.normal(size=4)
    return x / np.linalg.norm(x)


def random_m_class(rng: np.random.Generator, attempts: int = 100):
    """Weights from the flat simplex and phases solving sum p e^{2 i theta} = 0.

    Doubled phases (0, phi, psi, psi + pi) reduce the constraint to
    p0 + p1 e^{i phi} + (p2 - p3) e^{i psi} = 0, a triangle with sides
    p0, p1 and |p2 - p3|, solvable iff the triangle inequality holds.
    """
    for _ in range(attempts):
        p = rng.dirichlet(np.ones(4))
        for perm in itertools.permutations(range(4)):
            q = p[list(perm)]
            a, b, c = q[0], q[1], abs(q[2] - q[3])
            if a > b + c or b > a + c or c > a + b:
                continue
            # place a along +1, b at angle phi, c closing the triangle
            cos_phi = np.clip((c * c - a * a - b * b) / (2 * a * b), -1, 1) if a * b > 0 else 1.0
            phi = np.arccos(cos_phi)
            closing = -(a + b * np.exp(1j * phi))
            psi = np.angle(closing) if q[2] >= q[3] else np.angle(closing) + np.pi
            doubled = np.array([0.0, phi, psi, psi + np.pi])
            theta = np.empty(4)
            theta[list(perm)] = np.mod(doubled / 2, 2 * np.pi)
            if abs(np.sum(p * np.exp(2j * theta))) < 1e-10:
                return p, theta
    raise RuntimeError("failed to sample an M-class point")
