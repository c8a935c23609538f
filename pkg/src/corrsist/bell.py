"""Bell functionals, see-saw maximization and polytope membership by LP.

Correlator labels concatenate party letters with a setting digit, e.g.
``A1B0C1``, ``A1C1``, ``C0``. Outcome 0 is the +1 eigenvalue, outcome 1 the
-1 eigenvalue.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

from .families import TauMinCoords
from .qstate import (
    I2,
    MeasurementBattery,
    StateError,
    as_matrix,
    correlation_tensor,
    n_qubits_of,
    observable_matrix,
)

PARTY_LETTERS = "ABCDEF"
LP_TOL = 1e-9
NS_TOL = 1e-9
W3_B16_MAX = 4.72678

_TERM = re.compile(r"([A-F])(\d+)")


class BellError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    parties: int
    settings: int
    outcomes: int = 2


@dataclass(frozen=True)
class Behavior:
    """p(a|x) stored as ``table[x_1, ..., x_P, a_1, ..., a_P]``."""

    scenario: Scenario
    table: np.ndarray

    def __post_init__(self):
        sc = self.scenario
        t = np.asarray(self.table, dtype=float)
        shape = (sc.settings,) * sc.parties + (sc.outcomes,) * sc.parties
        if t.shape != shape:
            raise BellError(f"table shape {t.shape} does not match scenario {shape}")
        sums = t.reshape(sc.settings**sc.parties, -1).sum(axis=1)
        if np.max(np.abs(sums - 1)) > 1e-10:
            raise BellError("conditional distributions do not sum to one")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    def correlator(self, terms: dict) -> float:
        """<prod_i O_i^{x_i}> for ``terms = {party: setting}``; others marginalized."""
        P = self.scenario.parties
        x = tuple(terms.get(i, 0) for i in range(P))
        p = self.table[x]
        signs = np.ones(p.shape)
        for i in terms:
            shape = [1] * P
            shape[i] = 2
            signs = signs * np.array([1.0, -1.0]).reshape(shape)
        return float(np.sum(p * signs))

    def signalling_gap(self) -> float:
        """Largest change of any party subset's marginal across the others' settings."""
        sc = self.scenario
        P = sc.parties
        worst = 0.0
        for r in range(1, P):
            for keep in itertools.combinations(range(P), r):
                drop = [i for i in range(P) if i not in keep]
                marg = self.table.sum(axis=tuple(P + i for i in drop))
                # move dropped setting axes to the end and compare across them
                moved = np.moveaxis(marg, drop, list(range(P - len(drop), P)))
                flat = moved.reshape(moved.shape[: P - len(drop)] + (-1,) + moved.shape[P:])
                spread = flat.max(axis=len(keep)) - flat.min(axis=len(keep))
                worst = max(worst, float(spread.max()))
        return worst


@dataclass(frozen=True)
class BellInequality:
    scenario: Scenario
    coefficients: dict
    bound: float
    name: str = ""

    def __post_init__(self):
        coeffs = {}
        for label, c in self.coefficients.items():
            terms = parse_label(label)
            for party, x in terms.items():
                if party >= self.scenario.parties or x >= self.scenario.settings:
                    raise BellError(f"label {label} outside scenario {self.scenario}")
            coeffs[canonical_label(terms)] = float(c)
        if not np.isfinite(self.bound):
            raise BellError("bound must be finite")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def algebraic_max(self) -> float:
        return float(sum(abs(c) for c in self.coefficients.values()))

    def tensor(self) -> np.ndarray:
        """Coefficients as G[i_1..i_P], index 0 = party absent, x+1 = setting x."""
        P, S = self.scenario.parties, self.scenario.settings
        g = np.zeros((S + 1,) * P)
        for label, c in self.coefficients.items():
            terms = parse_label(label)
            g[tuple(terms[i] + 1 if i in terms else 0 for i in range(P))] += c
        return g


def parse_label(label: str) -> dict:
    if not label or _TERM.sub("", label):
        raise BellError(f"malformed correlator label {label!r}")
    terms = {}
    for letter, digit in _TERM.findall(label):
        party = PARTY_LETTERS.index(letter)
        if party in terms:
            raise BellError(f"party {letter} repeated in {label!r}")
        terms[party] = int(digit)
    return terms


def canonical_label(terms: dict) -> str:
    return "".join(f"{PARTY_LETTERS[p]}{terms[p]}" for p in sorted(terms))


def parse_inequality(text: str, name: str = "") -> BellInequality:
    scenario, bound, coeffs = None, None, {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        if key == "scenario":
            scenario = Scenario(*(int(v) for v in rest))
        elif key == "bound":
            bound = float(rest[0])
        elif key == "coef":
            label, value = rest
            coeffs[label] = coeffs.get(label, 0.0) + float(value)
        else:
            raise BellError(f"unrecognized line {raw!r}")
    if scenario is None or bound is None:
        raise BellError("inequality file needs 'scenario' and 'bound' lines")
    return BellInequality(scenario, coeffs, bound, name)


def format_inequality(ineq: BellInequality) -> str:
    sc = ineq.scenario
    lines = [f"scenario {sc.parties} {sc.settings} {sc.outcomes}", f"bound {ineq.bound!r}"]
    lines += [f"coef {label} {c!r}" for label, c in ineq.coefficients.items()]
    return "\n".join(lines) + "\n"


@lru_cache(maxsize=None)
def builtin_inequality(name: str) -> BellInequality:
    """Shipped inequalities: ``facet4``, ``b16`` and ``chsh``."""
    try:
        text = resources.files("corrsist.data").joinpath(f"{name}.txt").read_text()
    except FileNotFoundError:
        raise BellError(f"no built-in inequality named {name!r}") from None
    return parse_inequality(text, name)


def load_inequality(spec: str) -> BellInequality:
    path = Path(spec)
    if path.is_file():
        return parse_inequality(path.read_text(), path.stem)
    return builtin_inequality(spec)


# ---------------------------------------------------------------- behaviors

def behavior(rho, battery: MeasurementBattery) -> Behavior:
    m = as_matrix(rho)
    n = n_qubits_of(m)
    if battery.n_parties != n:
        raise StateError(f"battery has {battery.n_parties} parties, state has {n} qubits")
    S = battery.n_settings
    if len(set(S)) != 1:
        raise BellError("behaviors need the same number of settings per party")
    s = S[0]
    # projectors[p][x][a] = (1 + (-1)^a n.sigma)/2
    projs = [
        [[0.5 * (I2 + (1 - 2 * a) * observable_matrix(o.bloch)) for a in (0, 1)] for o in party]
        for party in battery.settings
    ]
    table = np.zeros((s,) * n + (2,) * n)
    t = m.reshape([2] * (2 * n))
    for xs in itertools.product(range(s), repeat=n):
        # contract party by party: p(a|x) = tr(rho * prod_p P_p)
        stacks = [np.stack(projs[p][xs[p]]) for p in range(n)]  # (2, 2, 2) per party
        letters = "abcdefghijkl"
        rows, cols, outs = letters[:n], letters[n:2 * n], "mnopqr"[:n]
        ops = ",".join(f"{outs[q]}{cols[q]}{rows[q]}" for q in range(n))
        table[xs] = np.real(np.einsum(f"{rows}{cols},{ops}->{outs}", t, *stacks))
    table = np.clip(table, 0.0, None)
    table /= table.reshape(s**n, -1).sum(axis=1).reshape((s,) * n + (1,) * n)
    return Behavior(Scenario(n, s), table)


def deterministic_behavior(scenario: Scenario, strategy) -> Behavior:
    """``strategy[p][x]`` is the outcome party p gives on setting x."""
    P, S = scenario.parties, scenario.settings
    table = np.zeros((S,) * P + (2,) * P)
    for xs in itertools.product(range(S), repeat=P):
        table[xs + tuple(strategy[p][xs[p]] for p in range(P))] = 1
    return Behavior(scenario, table)


def uniform_behavior(scenario: Scenario) -> Behavior:
    P, S = scenario.parties, scenario.settings
    return Behavior(scenario, np.full((S,) * P + (2,) * P, 0.5**P))


def pr_box(phase=(0, 0, 0)) -> np.ndarray:
    """Bipartite PR-type box as table[x, y, a, b]: a^b = xy ^ alpha x ^ beta y ^ gamma."""
    alpha, beta, gamma = phase
    t = np.zeros((2, 2, 2, 2))
    for x, y, a in itertools.product((0, 1), repeat=3):
        b = a ^ (x * y) ^ (alpha * x) ^ (beta * y) ^ gamma
        t[x, y, a, b] = 0.5
    return t


def evaluate_bell(ineq: BellInequality, b: Behavior) -> float:
    if ineq.scenario.parties != b.scenario.parties or ineq.scenario.settings > b.scenario.settings:
        raise BellError("inequality and behavior scenarios differ")
    return float(sum(c * b.correlator(parse_label(lab)) for lab, c in ineq.coefficients.items()))


# ---------------------------------------------------------------- quantum values

def _setting_matrix(vectors: np.ndarray) -> np.ndarray:
    """Rows: identity slot then one row per setting, as maps onto Pauli index 0..3."""
    s = vectors.shape[0]
    m = np.zeros((s + 1, 4))
    m[0, 0] = 1
    m[1:, 1:] = vectors
    return m


def _contract(g: np.ndarray, tensor: np.ndarray, mats, skip=None) -> np.ndarray:
    """Contract coefficient tensor and correlation tensor through per-party setting maps.

    With ``skip`` set, that party's setting map is left open and the result is
    an (S+1, 4) array ``h`` with value = sum(h * M_skip).
    """
    P = g.ndim
    letters = "abcdefgh"
    mus = "mnopqrst"
    parts = [letters[:P], mus[:P]]
    args = [g, tensor]
    for p in range(P):
        if p == skip:
            continue
        parts.append(letters[p] + mus[p])
        args.append(mats[p])
    out = "" if skip is None else letters[skip] + mus[skip]
    expr = ",".join(parts) + "->" + out
    return np.einsum(expr, *args, optimize=_einsum_path(expr, tuple(a.shape for a in args)))


@lru_cache(maxsize=256)
def _einsum_path(expr: str, shapes: tuple) -> list:
    return np.einsum_path(expr, *[np.empty(s) for s in shapes], optimize="greedy")[0]


def bell_value(ineq: BellInequality, rho, vectors) -> float:
    """Quantum value with ``vectors[p]`` an (S, 3) array of Bloch vectors."""
    g = ineq.tensor()
    t = correlation_tensor(rho)
    mats = [_setting_matrix(np.asarray(v, dtype=float)) for v in vectors]
    return float(_contract(g, t, mats))


def _seesaw(g, t, vectors, max_iter=500, tol=1e-10):
    P = g.ndim
    mats = [_setting_matrix(v) for v in vectors]
    value = float(_contract(g, t, mats))
    for _ in range(max_iter):
        for p in range(P):
            h = _contract(g, t, mats, skip=p)
            grad = h[1:, 1:]  # per setting, the vector multiplying n_x
            norms = np.linalg.norm(grad, axis=1)
            new = mats[p].copy()
            for x in range(grad.shape[0]):
                if norms[x] > 1e-14:
                    new[x + 1, 1:] = grad[x] / norms[x]
            mats[p] = new
        new_value = float(_contract(g, t, mats))
        if new_value - value < tol:
            value = max(value, new_value)
            break
        value = new_value
    return value, [m[1:, 1:].copy() for m in mats]


def _restart_rng(seed: int, restart: int) -> np.random.Generator:
    return np.random.default_rng([seed, restart])


def _random_vectors(rng, P, S):
    v = rng.normal(size=(P, S, 3))
    return v / np.linalg.norm(v, axis=2, keepdims=True)


def maximize_bell(ineq: BellInequality, rho, restarts: int = 64, seed: int = 0):
    """See-saw ascent from seeded random starts; returns (value, battery).

    The value is a lower bound on the quantum maximum for this state.
    """
    n = n_qubits_of(rho)
    P, S = ineq.scenario.parties, ineq.scenario.settings
    if P != n:
        raise BellError(f"inequality has {P} parties, state has {n} qubits")
    g = ineq.tensor()
    t = correlation_tensor(rho)
    best_value, best_vectors = -np.inf, None
    for r in range(restarts):
        value, vectors = _seesaw(g, t, _random_vectors(_restart_rng(seed, r), P, S))
        if value > best_value:
            best_value, best_vectors = value, vectors
    battery = MeasurementBattery(tuple(tuple(v) for v in best_vectors))
    return best_value, battery


# ---------------------------------------------------------------- closed forms

def _chsh_pair_max(t):
    """2 sqrt(t_i^2 + t_j^2) maximized over pairs of a diagonal correlation matrix."""
    tx, ty, tz = t
    return max(
        2 * np.sqrt(tx**2 + ty**2),
        2 * np.sqrt(tz**2 + tx**2),
        2 * np.sqrt(tz**2 + ty**2),
    )


def facet4_closed_max(c: TauMinCoords, which: int) -> float:
    """Largest facet-4 value reachable on the one-loss reduction ``which``."""
    x0, x1, x2, x3 = c.x
    if which in (1, 2):
        t = (1 - 2 * x0**2 - 2 * x2**2, 1 - 2 * x1**2 - 2 * x2**2, 1 - 2 * x0**2 - 2 * x1**2)
        return float(_chsh_pair_max(t))
    if which == 3:
        return float(4 * max(
            np.sqrt((x0 * x2 + x1 * x3) ** 2 + (x1 * x2 + x0 * x3) ** 2),
            np.sqrt((x0 * x1 + x2 * x3) ** 2 + (x1 * x2 + x0 * x3) ** 2),
            np.sqrt((x0 * x2 + x1 * x3) ** 2 + (x1 * x0 + x2 * x3) ** 2),
        ))
    if which == 4:
        return float(4 * max(
            np.sqrt((x0 * x1 - x2 * x3) ** 2 + (x0 * x2 - x1 * x3) ** 2),
            np.sqrt((x0 * x2 - x1 * x3) ** 2 + (x1 * x2 - x0 * x3) ** 2),
            np.sqrt((x1 * x2 - x0 * x3) ** 2 + (x1 * x0 - x2 * x3) ** 2),
        ))
    raise BellError("which must be 1..4")


def facet4_closed_max_grid(x0, x1, x2, x3) -> np.ndarray:
    """Vectorized min over the four reductions of ``facet4_closed_max``."""
    x0, x1, x2, x3 = (np.asarray(v, dtype=float) for v in (x0, x1, x2, x3))

    def pairmax(a, b, c):
        return 2 * np.sqrt(np.maximum(np.maximum(a * a + b * b, c * c + a * a), c * c + b * b))

    t12 = pairmax(1 - 2 * x0**2 - 2 * x2**2, 1 - 2 * x1**2 - 2 * x2**2, 1 - 2 * x0**2 - 2 * x1**2)
    t3 = pairmax(2 * (x0 * x2 + x1 * x3), 2 * (x1 * x2 + x0 * x3), 2 * (x0 * x1 + x2 * x3))
    t4 = pairmax(2 * (x0 * x1 - x2 * x3), 2 * (x0 * x2 - x1 * x3), 2 * (x1 * x2 - x0 * x3))
    return np.minimum(np.minimum(t12, t3), t4)


def b16_filtered_formula(p: float, eps: float) -> float:
    if not 0 < p <= 1:
        raise BellError("p must lie in (0, 1]")
    if not 0 < eps <= 1:
        raise BellError("eps must lie in (0, 1]")
    e2 = eps * eps
    return (p * W3_B16_MAX + 2 * e2 * (p - 1)) / (e2 * (1 - p) + p)


# ---------------------------------------------------------------- polytopes

def _strategies(settings: int):
    return list(itertools.product((0, 1), repeat=settings))


@lru_cache(maxsize=None)
def local_vertices(scenario: Scenario) -> np.ndarray:
    """All deterministic local behaviors, flattened, one per row."""
    P, S = scenario.parties, scenario.settings
    rows = []
    for strat in itertools.product(_strategies(S), repeat=P):
        rows.append(deterministic_behavior(scenario, strat).table.ravel())
    out = np.array(rows)
    out.setflags(write=False)
    return out


def bipartite_ns_vertices() -> list[np.ndarray]:
    """The 24 vertices of the two-party, two-setting no-signalling polytope."""
    verts = []
    for sa, sb in itertools.product(_strategies(2), repeat=2):
        t = np.zeros((2, 2, 2, 2))
        for x, y in itertools.product((0, 1), repeat=2):
            t[x, y, sa[x], sb[y]] = 1
        verts.append(t)
    for phase in itertools.product((0, 1), repeat=3):
        verts.append(pr_box(phase))
    return verts


def _embed(pair_table: np.ndarray, single: tuple, pair: tuple, lone: int) -> np.ndarray:
    """Three-party table from a two-party box on ``pair`` and deterministic ``lone``."""
    t = np.zeros((2,) * 6)
    i, j = pair
    for xs in itertools.product((0, 1), repeat=3):
        for a_i, a_j in itertools.product((0, 1), repeat=2):
            outs = [0, 0, 0]
            outs[i], outs[j], outs[lone] = a_i, a_j, single[xs[lone]]
            t[xs + tuple(outs)] += pair_table[xs[i], xs[j], a_i, a_j]
    return t


@lru_cache(maxsize=None)
def ns2_vertices() -> np.ndarray:
    """The 3 x 24 x 4 = 288 extremal NS2-local behaviors, flattened."""
    rows = []
    for pair, lone in (((0, 1), 2), ((0, 2), 1), ((1, 2), 0)):
        for box in bipartite_ns_vertices():
            for single in _strategies(2):
                rows.append(_embed(box, single, pair, lone).ravel())
    out = np.array(rows)
    out.setflags(write=False)
    return out


def _convex_gap(vertices: np.ndarray, target: np.ndarray) -> float:
    """min over mixtures q of max_k |sum_v q_v V_vk - b_k|."""
    nv, nk = vertices.shape
    # variables: q (nv), t
    c = np.zeros(nv + 1)
    c[-1] = 1
    A_ub = np.block([[vertices.T, -np.ones((nk, 1))], [-vertices.T, -np.ones((nk, 1))]])
    b_ub = np.concatenate([target, -target])
    A_eq = np.concatenate([np.ones(nv), [0.0]])[None, :]
    res = linprog(
        c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
        bounds=[(0, None)] * nv + [(0, None)], method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise BellError(f"LP failed: {res.message}")
    return float(res.x[-1])


def local_membership(b: Behavior) -> str:
    sc = b.scenario
    if sc.parties > 3 or sc.settings > 2 or sc.outcomes != 2:
        raise BellError("local membership is implemented up to (3, 2, 2)")
    gap = _convex_gap(local_vertices(sc), b.table.ravel())
    return "Inside" if gap <= LP_TOL else "Outside"


def ns2_membership(b: Behavior) -> str:
    if b.scenario != Scenario(3, 2, 2):
        raise BellError("NS2 membership needs scenario (3, 2, 2)")
    gap = _convex_gap(ns2_vertices(), b.table.ravel())
    return "Inside" if gap <= LP_TOL else "Outside"


def vertex_max(ineq: BellInequality, vertices: np.ndarray) -> float:
    sc = ineq.scenario
    return max(
        evaluate_bell(ineq, Behavior(sc, v.reshape((sc.settings,) * sc.parties + (2,) * sc.parties)))
        for v in vertices
    )
