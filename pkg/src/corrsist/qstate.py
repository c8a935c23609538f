"""Dense state algebra for a handful of qubits.

Qubit 1 is the leftmost tensor factor (most significant bit of the basis
index). All loss sets and cuts are given with 1-based qubit labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

STATE_TOL = 1e-10
PSD_TOL = 1e-9
MAX_QUBITS = 6
NPT_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SX, SY, SZ)


class StateError(ValueError):
    """Raised for malformed states, indices or arities."""


class AnnihilatedError(StateError):
    """A filter removed the whole state."""


def _n_from_dim(dim: int) -> int:
    n = int(round(np.log2(dim)))
    if n < 1 or 2**n != dim:
        raise StateError(f"dimension {dim} is not a power of two")
    if n > MAX_QUBITS:
        raise StateError(f"{n} qubits exceeds the supported maximum of {MAX_QUBITS}")
    return n


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray
    n_qubits: int = field(init=False)

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex).ravel()
        n = _n_from_dim(amp.size)
        norm = np.vdot(amp, amp).real
        if abs(norm - 1) > STATE_TOL:
            raise StateError(f"state not normalized (norm^2 = {norm:.3g})")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "n_qubits", n)

    @classmethod
    def normalized(cls, amplitudes) -> "PureState":
        amp = np.asarray(amplitudes, dtype=complex).ravel()
        nrm = np.linalg.norm(amp)
        if nrm < 1e-14:
            raise StateError("zero vector")
        return cls(amp / nrm)

    def dm(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)


@dataclass(frozen=True)
class DensityMatrix:
    entries: np.ndarray
    n_qubits: int = field(init=False)

    def __post_init__(self):
        rho = np.array(self.entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise StateError("density matrix must be square")
        n = _n_from_dim(rho.shape[0])
        if np.max(np.abs(rho - rho.conj().T)) > STATE_TOL:
            raise StateError("density matrix not Hermitian")
        if abs(np.trace(rho).real - 1) > STATE_TOL:
            raise StateError(f"trace {np.trace(rho).real:.12g} != 1")
        if np.linalg.eigvalsh(rho)[0] < -PSD_TOL:
            raise StateError("density matrix not positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)
        object.__setattr__(self, "n_qubits", n)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True)
class QubitObservable:
    """The +-1 valued observable bloch . sigma."""

    bloch: tuple

    def __post_init__(self):
        v = np.asarray(self.bloch, dtype=float).ravel()
        if v.size != 3 or abs(np.linalg.norm(v) - 1) > STATE_TOL:
            raise StateError(f"Bloch vector {v} is not a unit 3-vector")
        object.__setattr__(self, "bloch", tuple(float(t) for t in v))

    @property
    def matrix(self) -> np.ndarray:
        return observable_matrix(self.bloch)


@dataclass(frozen=True)
class MeasurementBattery:
    """Per-party settings, ``settings[party][x]``."""

    settings: tuple

    def __post_init__(self):
        parties = []
        for party in self.settings:
            obs = tuple(o if isinstance(o, QubitObservable) else QubitObservable(o) for o in party)
            if not obs:
                raise StateError("every party needs at least one setting")
            parties.append(obs)
        object.__setattr__(self, "settings", tuple(parties))

    @property
    def n_parties(self) -> int:
        return len(self.settings)

    @property
    def n_settings(self) -> tuple:
        return tuple(len(p) for p in self.settings)

    def bloch_array(self, party: int) -> np.ndarray:
        return np.array([o.bloch for o in self.settings[party]])

    @classmethod
    def random(cls, n_parties: int, n_settings: int, rng: np.random.Generator) -> "MeasurementBattery":
        return cls(tuple(tuple(random_unit_vector(rng) for _ in range(n_settings)) for _ in range(n_parties)))


@dataclass(frozen=True)
class LocalFilter:
    matrices: tuple

    def __post_init__(self):
        mats = []
        for m in self.matrices:
            m = np.array(m, dtype=complex)
            if m.shape != (2, 2):
                raise StateError("filters act on single qubits")
            if np.linalg.norm(m, 2) > 1 + 1e-12:
                raise StateError("filter is not a contraction (M^dag M > 1)")
            m.setflags(write=False)
            mats.append(m)
        object.__setattr__(self, "matrices", tuple(mats))

    @classmethod
    def diag_eps(cls, eps: float, n: int) -> "LocalFilter":
        return cls(tuple(np.diag([eps, 1.0]) for _ in range(n)))

    def operator(self) -> np.ndarray:
        return kron_all(self.matrices)


def as_matrix(rho) -> np.ndarray:
    """Density matrix (or pure state) as a plain complex array."""
    if isinstance(rho, PureState):
        return np.outer(rho.amplitudes, rho.amplitudes.conj())
    a = np.asarray(rho, dtype=complex)
    if a.ndim == 1:
        return np.outer(a, a.conj())
    return a


def n_qubits_of(rho) -> int:
    return _n_from_dim(as_matrix(rho).shape[0])


def kron_all(mats) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def observable_matrix(bloch) -> np.ndarray:
    b = np.asarray(bloch, dtype=float)
    return b[0] * SX + b[1] * SY + b[2] * SZ


def random_unit_vector(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_pure(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return v / np.linalg.norm(v)


def random_qubit_dm(rng: np.random.Generator) -> np.ndarray:
    r = random_unit_vector(rng) * rng.uniform() ** (1 / 3)
    return 0.5 * (I2 + observable_matrix(r))


def _check_labels(labels, n, what="index") -> list[int]:
    labels = [int(i) for i in labels]
    if len(set(labels)) != len(labels):
        raise StateError(f"repeated {what} in {labels}")
    for i in labels:
        if not 1 <= i <= n:
            raise StateError(f"{what} {i} out of range 1..{n}")
    return labels


def partial_trace(rho, lost) -> np.ndarray:
    """Trace out the qubits in ``lost``; survivors keep their relative order."""
    m = as_matrix(rho)
    n = _n_from_dim(m.shape[0])
    lost = _check_labels(lost, n, "qubit")
    if len(lost) >= n:
        raise StateError("cannot trace out every qubit")
    keep = [q for q in range(n) if q + 1 not in lost]
    t = m.reshape([2] * (2 * n))
    row = list(range(n))
    col = [n + q if q in keep else q for q in range(n)]
    out = [q for q in keep] + [n + q for q in keep]
    red = np.einsum(t, row + col, out)
    d = 2 ** len(keep)
    return red.reshape(d, d)


def reduced_keep(rho, keep) -> np.ndarray:
    """Reduced state on the (1-based) qubits in ``keep``."""
    n = n_qubits_of(rho)
    keep = _check_labels(keep, n, "qubit")
    return partial_trace(rho, [q for q in range(1, n + 1) if q not in keep])


def correlator(rho, observables) -> float:
    """tr(rho O_1 x ... x O_n); ``None`` in a slot means identity."""
    m = as_matrix(rho)
    n = _n_from_dim(m.shape[0])
    if len(observables) != n:
        raise StateError(f"need {n} observables, got {len(observables)}")
    mats = []
    for o in observables:
        if o is None:
            mats.append(I2)
        elif isinstance(o, QubitObservable):
            mats.append(o.matrix)
        else:
            o = np.asarray(o)
            mats.append(o if o.shape == (2, 2) else observable_matrix(o))
    return float(np.real(np.trace(m @ kron_all(mats))))


def correlation_tensor(rho) -> np.ndarray:
    """Pauli expansion T[mu_1, ..., mu_n] = tr(rho sigma_mu1 x ... x sigma_mun), mu=0 the identity."""
    m = as_matrix(rho)
    n = _n_from_dim(m.shape[0])
    basis = np.stack([I2, SX, SY, SZ])
    t = m.reshape([2] * (2 * n))
    letters = "abcdefghijkl"
    rows, cols, mus = letters[:n], letters[n:2 * n], "mnopqr"[:n]
    ops = ",".join(f"{mus[q]}{cols[q]}{rows[q]}" for q in range(n))
    return np.real(np.einsum(f"{rows}{cols},{ops}->{mus}", t, *([basis] * n)))


def apply_filter(rho, filt: LocalFilter):
    """Filtered, renormalized state and the success probability of the filter."""
    m = as_matrix(rho)
    n = _n_from_dim(m.shape[0])
    if len(filt.matrices) != n:
        raise StateError(f"filter has {len(filt.matrices)} factors for {n} qubits")
    f = filt.operator()
    out = f @ m @ f.conj().T
    prob = float(np.trace(out).real)
    if prob < 1e-14:
        raise AnnihilatedError("filter annihilates state")
    return out / prob, prob


def bloch_and_T(rho):
    """Local Bloch vectors a, b and correlation matrix T of a two-qubit state."""
    t = correlation_tensor(rho)
    if t.ndim != 2:
        raise StateError("bloch_and_T needs two qubits")
    return t[1:, 0], t[0, 1:], t[1:, 1:]


def partial_transpose(rho, subsystem) -> np.ndarray:
    m = as_matrix(rho)
    n = n_qubits_of(m)
    t = m.reshape([2] * (2 * n))
    axes = list(range(2 * n))
    for q in subsystem:
        i = q - 1
        axes[i], axes[n + i] = axes[n + i], axes[i]
    return t.transpose(axes).reshape(m.shape)


def min_pt_eigenvalue(rho, subsystem) -> float:
    return float(np.linalg.eigvalsh(partial_transpose(rho, subsystem))[0])


def ppt_check(rho, bipartition) -> str:
    n = n_qubits_of(rho)
    sub = sorted(set(int(q) for q in bipartition))
    if not sub or len(sub) >= n or sub[0] < 1 or sub[-1] > n:
        raise StateError(f"invalid bipartition {bipartition} for {n} qubits")
    return "NPT" if min_pt_eigenvalue(rho, sub) < -NPT_TOL else "PPT"
