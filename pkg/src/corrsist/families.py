"""Named four-qubit families, W states and their closed-form reductions.

Generic-class states are sum_j z_j u_j with

    u0 = |phi+>|phi+>,  u1 = |phi->|phi->,  u2 = |psi+>|psi+>,  u3 = |psi->|psi->

expanded directly as tensor products, which gives amplitude (z0+z1)/2 on
0000/1111, (z0-z1)/2 on 0011/1100, (z2+z3)/2 on 0101/1010 and (z2-z3)/2 on
0110/1001.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qstate import (
    SX,
    DensityMatrix,
    LocalFilter,
    PureState,
    StateError,
    apply_filter,
    kron_all,
    partial_trace,
)

COORD_TOL = 1e-10
MCLASS_TOL = 1e-8

_S = 1 / np.sqrt(2)
PHI_P = np.array([1, 0, 0, 1]) * _S
PHI_M = np.array([1, 0, 0, -1]) * _S
PSI_P = np.array([0, 1, 1, 0]) * _S
PSI_M = np.array([0, 1, -1, 0]) * _S
BELL_PAIRS = tuple(np.kron(b, b).astype(complex) for b in (PHI_P, PHI_M, PSI_P, PSI_M))


def ket(bits: str) -> np.ndarray:
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1
    return v


@dataclass(frozen=True)
class GenericACoords:
    z: tuple

    def __post_init__(self):
        z = np.asarray(self.z, dtype=complex).ravel()
        if z.size != 4:
            raise StateError("generic-class coordinates are a complex 4-vector")
        if abs(np.sum(np.abs(z) ** 2) - 1) > COORD_TOL:
            raise StateError("generic-class coordinates are not normalized")
        object.__setattr__(self, "z", tuple(complex(t) for t in z))


@dataclass(frozen=True)
class TauMinCoords:
    x: tuple

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        if x.size != 4:
            raise StateError("tau_min coordinates are a real 4-vector")
        if abs(np.sum(x**2) - 1) > COORD_TOL:
            raise StateError(f"tau_min coordinates not normalized (sum x^2 = {np.sum(x**2):.12g})")
        object.__setattr__(self, "x", tuple(float(t) for t in x))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.x)

    @classmethod
    def from_x012(cls, x0, x1, x2, sign=1.0):
        """Complete (x0, x1, x2) with x3 = sign * sqrt(1 - x0^2 - x1^2 - x2^2)."""
        rad = 1 - x0 * x0 - x1 * x1 - x2 * x2
        if rad < -1e-12:
            raise StateError("x0^2 + x1^2 + x2^2 exceeds 1")
        return cls((x0, x1, x2, sign * np.sqrt(max(rad, 0.0))))


@dataclass(frozen=True)
class MClassCoords:
    p: tuple
    theta: tuple

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).ravel()
        th = np.asarray(self.theta, dtype=float).ravel()
        if p.size != 4 or th.size != 4:
            raise StateError("M-class coordinates need 4 weights and 4 phases")
        if np.any(p < -COORD_TOL):
            raise StateError("M-class weights must be nonnegative")
        if abs(p.sum() - 1) > COORD_TOL:
            raise StateError("M-class weights must sum to 1")
        residual = abs(np.sum(p * np.exp(2j * th)))
        if residual > MCLASS_TOL:
            raise StateError(f"M-class phase constraint violated (|sum p e^(2i theta)| = {residual:.3g})")
        object.__setattr__(self, "p", tuple(float(t) for t in np.clip(p, 0, None)))
        object.__setattr__(self, "theta", tuple(float(t) for t in th))

    @property
    def z(self) -> np.ndarray:
        return np.sqrt(np.array(self.p)) * np.exp(1j * np.array(self.theta))


def _combine(z) -> np.ndarray:
    return sum(zj * u for zj, u in zip(z, BELL_PAIRS))


def generic_a_state(c: GenericACoords) -> PureState:
    return PureState(_combine(c.z))


def tau_min_state(c: TauMinCoords) -> PureState:
    return PureState(_combine(c.x))


def m_class_state(c: MClassCoords) -> PureState:
    return PureState(_combine(c.z))


# coordinates of a few named states inside the tau_min family
GHZ_COORDS = TauMinCoords((_S, _S, 0.0, 0.0))
DICKE_COORDS = TauMinCoords((1 / np.sqrt(6), -1 / np.sqrt(6), 2 / np.sqrt(6), 0.0))
BELL_PAIR_COORDS = TauMinCoords((1.0, 0.0, 0.0, 0.0))


def ghz(n: int) -> np.ndarray:
    v = np.zeros(2**n, dtype=complex)
    v[0] = v[-1] = _S
    return v


def w_state(n: int) -> np.ndarray:
    v = np.zeros(2**n, dtype=complex)
    for q in range(n):
        v[1 << q] = 1
    return v / np.sqrt(n)


def dicke4() -> np.ndarray:
    v = np.zeros(16, dtype=complex)
    for i in range(16):
        if bin(i).count("1") == 2:
            v[i] = 1 / np.sqrt(6)
    return v


def cluster4() -> np.ndarray:
    return 0.5 * (ket("0000") + ket("0011") + ket("1100") - ket("1111"))


def named_state(name: str, n: int | None = None) -> PureState:
    key = name.lower()
    if key in ("ghz", "w"):
        if n is None or n < 2:
            raise StateError(f"{name} needs n >= 2")
        return PureState(ghz(n) if key == "ghz" else w_state(n))
    if key in ("cluster4", "dicke4"):
        if n not in (None, 4):
            raise StateError(f"{name} is a four-qubit state")
        return PureState(cluster4() if key == "cluster4" else dicke4())
    raise StateError(f"unknown state name {name!r}")


def w_loss_mixture(p: float) -> DensityMatrix:
    """p |W3><W3| + (1-p) |000><000|."""
    if not 0 <= p <= 1:
        raise StateError("mixing weight must lie in [0, 1]")
    w = w_state(3)
    zero = ket("000")
    return DensityMatrix(p * np.outer(w, w.conj()) + (1 - p) * np.outer(zero, zero))


def _flip(v: np.ndarray) -> np.ndarray:
    n = int(np.log2(v.size))
    return kron_all([SX] * n) @ v


def _mix(vectors) -> np.ndarray:
    return sum(np.outer(v, v.conj()) for v in vectors)


def w_tilde(x, which: int) -> np.ndarray:
    x0, x1, x2, x3 = x
    a, b, c = (x2 - x3) / 2, (x2 + x3) / 2, (x0 - x1) / 2
    coeffs = {
        1: (a, b, c),
        2: (b, a, c),
        3: (c, a, b),
        4: (c, b, a),
    }[which]
    return coeffs[0] * ket("001") + coeffs[1] * ket("010") + coeffs[2] * ket("100")


def psi3(x, which: int) -> np.ndarray:
    return w_tilde(x, which) + (x[0] + x[1]) / 2 * ket("111")


def eta2(x, which: int) -> np.ndarray:
    x0, x1, x2, x3 = x
    first = {1: (x0 - x1) / 2, 2: (x2 + x3) / 2, 3: (x2 - x3) / 2}[which]
    return first * ket("00") + (x0 + x1) / 2 * ket("11")


def xi2(x, which: int) -> np.ndarray:
    x0, x1, x2, x3 = x
    pair = {
        1: ((x2 - x3) / 2, (x2 + x3) / 2),
        2: ((x2 - x3) / 2, (x0 - x1) / 2),
        3: ((x2 + x3) / 2, (x0 - x1) / 2),
    }[which]
    return pair[0] * ket("01") + pair[1] * ket("10")


# pair index -> qubits traced out of the four-qubit state
PAIR_LOSS = {1: (1, 2), 2: (1, 3), 3: (1, 4)}


def tau_min_reduced(c: TauMinCoords, lost: int, which: int) -> DensityMatrix:
    """Closed-form one- or two-particle-loss reduction of a tau_min state.

    ``lost=1, which=i`` traces out qubit i. ``lost=2`` indexes the three
    inequivalent retained pairs; see ``PAIR_LOSS`` for the qubits removed.
    """
    x = c.array
    if lost == 1:
        if which not in (1, 2, 3, 4):
            raise StateError("one-loss index must be 1..4")
        psi = psi3(x, which)
        return DensityMatrix(_mix([psi, _flip(psi)]))
    if lost == 2:
        if which not in (1, 2, 3):
            raise StateError("two-loss index must be 1..3")
        eta, xi = eta2(x, which), xi2(x, which)
        return DensityMatrix(_mix([eta, xi, _flip(eta), _flip(xi)]))
    raise StateError("closed forms exist for one or two lost particles only")


def direct_reduction(c: TauMinCoords, lost: int, which: int) -> np.ndarray:
    """The same reductions by explicit partial trace of the pure state."""
    psi = tau_min_state(c)
    if lost == 1:
        return partial_trace(psi, [which])
    return partial_trace(psi, PAIR_LOSS[which])


def _floats(text: str, count: int) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise StateError(f"bad number list {text!r}") from exc
    if len(vals) != count:
        raise StateError(f"expected {count} numbers, got {len(vals)}")
    return vals


def parse_state_spec(spec: str):
    """State from a short text spec; returns (state, TauMinCoords or None).

    Accepted forms: ghz:N, w:N, cluster4, dicke4, taumin:x0,x1,x2,x3,
    genA:z0,z1,z2,z3 (Python complex literals), mclass:p0,..,p3;t0,..,t3,
    wmix:p and wmix:p;filter=eps.
    """
    spec = spec.strip()
    head, _, body = spec.partition(":")
    key = head.lower()
    if key in ("cluster4", "dicke4") and not body:
        return named_state(key), None
    if key in ("ghz", "w"):
        try:
            n = int(body)
        except ValueError as exc:
            raise StateError(f"{head} needs a qubit count, got {body!r}") from exc
        return named_state(key, n), None
    if key == "taumin":
        c = TauMinCoords(_floats(body, 4))
        return tau_min_state(c), c
    if key == "gena":
        try:
            z = [complex(v.replace(" ", "")) for v in body.split(",")]
        except ValueError as exc:
            raise StateError(f"bad complex list {body!r}") from exc
        return generic_a_state(GenericACoords(z)), None
    if key == "mclass":
        p_text, sep, t_text = body.partition(";")
        if not sep:
            raise StateError("mclass needs weights;phases")
        return m_class_state(MClassCoords(_floats(p_text, 4), _floats(t_text, 4))), None
    if key == "wmix":
        p_text, sep, rest = body.partition(";")
        rho = w_loss_mixture(_floats(p_text, 1)[0])
        if sep:
            name, _, eps_text = rest.partition("=")
            if name.strip() != "filter":
                raise StateError(f"unknown wmix option {rest!r}")
            eps = _floats(eps_text, 1)[0]
            if not 0 < eps <= 1:
                raise StateError("filter eps must lie in (0, 1]")
            filtered, _ = apply_filter(rho, LocalFilter.diag_eps(eps, 3))
            rho = DensityMatrix(filtered)
        return rho, None
    raise StateError(f"unknown state spec {spec!r}")
