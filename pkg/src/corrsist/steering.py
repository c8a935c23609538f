"""Two-qubit steering criteria and a three-setting genuine-steering functional."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bell import Behavior, Scenario, behavior
from .families import TauMinCoords
from .qstate import (
    MeasurementBattery,
    QubitObservable,
    StateError,
    bloch_and_T,
    correlation_tensor,
    n_qubits_of,
)

DETECTED = "Detected"
UNDETECTED = "Undetected"

T_TOL = 1e-9
BLOCH_TOL = 1e-12
GENUINE_BOUND = 3.0
PRODUCT_STATE_BOUND = 1.0
FRAME_TOL = 1e-9


@dataclass(frozen=True)
class SteeringVerdict:
    verdict: str
    criterion: str
    value: float

    @property
    def detected(self) -> bool:
        return self.verdict == DETECTED

    def as_dict(self):
        return {"verdict": self.verdict, "criterion": self.criterion, "value": self.value}


def _verdict(criterion: str, margin: float) -> SteeringVerdict:
    return SteeringVerdict(DETECTED if margin > 0 else UNDETECTED, criterion, float(margin))


# ---------------------------------------------------------------- T-diagonal criterion

def t_diag_margin(t) -> float:
    t = np.asarray(t, dtype=float)
    if t.shape != (3,):
        raise StateError("need three correlation-matrix diagonal entries")
    if np.any(np.abs(t) > 1 + T_TOL):
        raise StateError(f"correlation entries {t} exceed 1 in magnitude")
    t = np.clip(t, -1, 1)
    margins = []
    for k in range(3):
        i, j = [m for m in range(3) if m != k]
        margins.append(abs(t[i]) + abs(t[j]) - (4 / np.pi) * np.sqrt(1 - t[k] ** 2))
    return float(max(margins))


def t_diag_criterion(t) -> SteeringVerdict:
    """Pairwise |t_i| + |t_j| against (4/pi) sqrt(1 - t_k^2); strict."""
    return _verdict("t-diagonal", t_diag_margin(t))


def _two_loss_diagonals(x):
    x0, x1, x2, x3 = x
    return (
        (-1 + 2 * x0**2 + 2 * x2**2, -1 + 2 * x1**2 + 2 * x2**2, -1 + 2 * x0**2 + 2 * x1**2),
        (2 * (x0 * x2 + x1 * x3), -2 * (x1 * x2 + x0 * x3), 2 * (x0 * x1 + x2 * x3)),
        (2 * x0 * x2 - 2 * x1 * x3, -2 * x1 * x2 + 2 * x0 * x3, 2 * x0 * x1 - 2 * x2 * x3),
    )


def appendix_b_conditions(c: TauMinCoords):
    """Closed-form steering margins of the three two-loss reductions.

    Entry i is the T-diagonal margin of ``tau_min_reduced(c, 2, i)``, whose
    local Bloch vectors vanish and whose correlation matrix is diagonal.
    """
    return tuple(t_diag_margin(np.clip(t, -1, 1)) for t in _two_loss_diagonals(c.x))


def appendix_b_grid(x0, x1, x2, x3):
    """Vectorized version of ``appendix_b_conditions``; returns three arrays."""
    x = [np.asarray(v, dtype=float) for v in (x0, x1, x2, x3)]
    out = []
    for t in _two_loss_diagonals(x):
        t = [np.clip(v, -1, 1) for v in t]
        m = None
        for k in range(3):
            i, j = [q for q in range(3) if q != k]
            v = np.abs(t[i]) + np.abs(t[j]) - (4 / np.pi) * np.sqrt(1 - t[k] ** 2)
            m = v if m is None else np.maximum(m, v)
        out.append(m)
    return tuple(out)


# ---------------------------------------------------------------- registry

def _signed_singular_values(T):
    u, s, vt = np.linalg.svd(T)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        s = s.copy()
        s[-1] = -s[-1]
    return s


def _check_two_qubits(rho):
    if n_qubits_of(rho) != 2:
        raise StateError("two-qubit steering criteria need two qubits")


def criterion_t_diag(rho) -> SteeringVerdict:
    """T-diagonal criterion in the frame where T is diagonal; only for vanishing Bloch vectors."""
    _check_two_qubits(rho)
    a, b, T = bloch_and_T(rho)
    if max(np.abs(a).max(), np.abs(b).max()) > BLOCH_TOL:
        return SteeringVerdict(UNDETECTED, "t-diagonal (not applicable: nonzero Bloch vectors)", float("nan"))
    return t_diag_criterion(_signed_singular_values(T))


def _linear(rho, settings: int) -> SteeringVerdict:
    _check_two_qubits(rho)
    _, _, T = bloch_and_T(rho)
    s = np.linalg.svd(T, compute_uv=False)
    value = np.sqrt(np.sum(s[:settings] ** 2))
    return _verdict(f"linear-{settings}", value - 1)


def criterion_linear2(rho) -> SteeringVerdict:
    return _linear(rho, 2)


def criterion_linear3(rho) -> SteeringVerdict:
    return _linear(rho, 3)


# name -> detector; None marks a slot with no shipped formula
CRITERIA = {
    "t-diagonal": criterion_t_diag,
    "linear-2": criterion_linear2,
    "linear-3": criterion_linear3,
    "ellipsoid": None,
}


def detect_steering_2q(rho, criteria=None) -> SteeringVerdict:
    """First registered criterion that detects, else the best undetected margin."""
    names = list(CRITERIA) if criteria is None else list(criteria)
    best = None
    for name in names:
        if name not in CRITERIA:
            raise KeyError(f"unknown steering criterion {name!r}")
        fn = CRITERIA[name]
        if fn is None:
            continue
        v = fn(rho)
        if v.detected:
            return v
        if best is None or (np.isfinite(v.value) and (not np.isfinite(best.value) or v.value > best.value)):
            best = v
    if best is None:
        return SteeringVerdict(UNDETECTED, "no criterion available", float("nan"))
    return best


# ---------------------------------------------------------------- genuine steering

# K[i, x, y]: coefficient of <A_x B_y C_i>
GAME = np.zeros((3, 3, 3))
for _x, _y in ((0, 0), (1, 1), (2, 2)):
    GAME[0, _x, _y] = 1
for (_x, _y), _s in zip(((0, 2), (1, 0), (2, 1)), (1, -1, 1)):
    GAME[1, _x, _y] = _s
for (_x, _y), _s in zip(((0, 1), (1, 2), (2, 0)), (1, -1, 1)):
    GAME[2, _x, _y] = _s


def _observables(vs):
    obs = tuple(v if isinstance(v, QubitObservable) else QubitObservable(v) for v in vs)
    if len(obs) != 3:
        raise StateError("three settings per party")
    return obs


@dataclass(frozen=True)
class GenuineSteeringSettings:
    a: tuple
    b: tuple
    c: tuple

    def __post_init__(self):
        for name in ("a", "b", "c"):
            object.__setattr__(self, name, _observables(getattr(self, name)))

    def arrays(self):
        return tuple(np.array([o.bloch for o in getattr(self, p)]) for p in ("a", "b", "c"))

    @property
    def trusted_frames(self) -> bool:
        """Whether Alice's and Bob's settings are orthonormal triads."""
        a, b, _ = self.arrays()
        return bool(np.allclose(a @ a.T, np.eye(3), atol=FRAME_TOL) and np.allclose(b @ b.T, np.eye(3), atol=FRAME_TOL))

    def as_dict(self):
        a, b, c = self.arrays()
        return {"A": a.tolist(), "B": b.tolist(), "C": c.tolist()}


def _three_body(rho) -> np.ndarray:
    if n_qubits_of(rho) != 3:
        raise StateError("the genuine-steering functional needs three qubits")
    return correlation_tensor(rho)[1:, 1:, 1:]


def _game_value(T3, A, B, C) -> float:
    return float(np.einsum("ixy,xa,yb,ic,abc->", GAME, A, B, C, T3))


def genuine_steering_value(rho, s: GenuineSteeringSettings) -> float:
    """|<D0 C0> + <D1 C1> + <D2 C2>|."""
    A, B, C = s.arrays()
    return abs(_game_value(_three_body(rho), A, B, C))


def d_values(rho_ab, a, b) -> np.ndarray:
    """(D0, D1, D2) of a two-qubit state for setting triads a and b."""
    if n_qubits_of(rho_ab) != 2:
        raise StateError("D values need a two-qubit state")
    T = correlation_tensor(rho_ab)[1:, 1:]
    A, B = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return np.einsum("ixy,xa,yb,ab->i", GAME, A, B, T)


def product_s3_value(a, b, rho_ab) -> float:
    """S3 = <A0B0 + A1B1 + A2B2>; bounded by 1 on product states for orthonormal triads."""
    return float(d_values(rho_ab, a, b)[0])


def _polar(G):
    u, _, vt = np.linalg.svd(G)
    return u @ vt


def _game_seesaw(T3, A, B, C, max_iter=2000, tol=1e-12):
    value = _game_value(T3, A, B, C)
    for _ in range(max_iter):
        A = _polar(np.einsum("ixy,yb,ic,abc->xa", GAME, B, C, T3))
        B = _polar(np.einsum("ixy,xa,ic,abc->yb", GAME, A, C, T3))
        G = np.einsum("ixy,xa,yb,abc->ic", GAME, A, B, T3)
        n = np.linalg.norm(G, axis=1)
        C = np.where(n[:, None] > 1e-14, G / np.where(n > 1e-14, n, 1)[:, None], C)
        new = _game_value(T3, A, B, C)
        if new - value < tol:
            value = max(value, new)
            break
        value = new
    return value, A, B, C


def maximize_genuine_steering(rho, restarts: int = 64, seed: int = 0):
    """See-saw over orthonormal triads for Alice and Bob and free settings for Charlie.

    Returns (value, GenuineSteeringSettings); the value lower-bounds the
    maximum of the functional over those settings.
    """
    T3 = _three_body(rho)
    best = (-np.inf, None)
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        A = _polar(rng.normal(size=(3, 3)))
        B = _polar(rng.normal(size=(3, 3)))
        C = rng.normal(size=(3, 3))
        C /= np.linalg.norm(C, axis=1, keepdims=True)
        value, A, B, C = _game_seesaw(T3, A, B, C)
        if value > best[0]:
            best = (value, (A, B, C))
    A, B, C = best[1]
    # unit-normalize against rounding before wrapping
    A, B, C = (m / np.linalg.norm(m, axis=1, keepdims=True) for m in (A, B, C))
    return float(best[0]), GenuineSteeringSettings(tuple(A), tuple(B), tuple(C))


def detect_genuine_steering(rho, restarts: int = 64, seed: int = 0) -> SteeringVerdict:
    value, _ = maximize_genuine_steering(rho, restarts, seed)
    return _verdict("three-setting genuine steering", value - GENUINE_BOUND)


# ---------------------------------------------------------------- relabelings

def ab_behavior(rho_ab, a, b) -> Behavior:
    """Two-party, three-setting behavior table[x, y, a, b] from Bloch triads."""
    return behavior(rho_ab, MeasurementBattery((tuple(a), tuple(b))))


def relabel(b: Behavior, bob_shift: int) -> Behavior:
    """Flip Alice's outcome on odd inputs (a -> a + x mod 2) and shift Bob's input by ``bob_shift`` mod 3."""
    sc = b.scenario
    if sc.parties != 2 or sc.settings != 3:
        raise StateError("relabeling acts on two-party three-setting behaviors")
    t = np.asarray(b.table)
    out = np.empty_like(t)
    for x in range(3):
        for y in range(3):
            block = t[x, (y + bob_shift) % 3]
            out[x, y] = block[::-1] if x % 2 else block
    return Behavior(Scenario(2, 3), out)


def d_from_behavior(b: Behavior) -> np.ndarray:
    """(D0, D1, D2) computed from a two-party behavior table."""
    corr = np.array([[b.correlator({0: x, 1: y}) for y in range(3)] for x in range(3)])
    return np.einsum("ixy,xy->i", GAME, corr)
