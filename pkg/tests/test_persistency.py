import dataclasses

import numpy as np
import pytest

from corrsist.entdetect import ABSENT, DETECTED
from corrsist.families import DICKE_COORDS, cluster4, dicke4, ghz, w_state
from corrsist.persistency import (
    UNCERTIFIED,
    PersistencyError,
    PersistencyOptions,
    PersistencyReport,
    PropertyKind,
    best_shared_filter,
    detect,
    fingerprint,
    hierarchy_validate,
    is_permutation_symmetric,
    persistency_bounds,
)
from corrsist.qstate import partial_trace


def dm(v):
    return np.outer(v, np.conj(v))


FAST = PersistencyOptions(batteries=4, restarts=4, seed=0)


@pytest.mark.parametrize("kind", ["E", "GE"])
def test_ghz4_loses_everything_at_once(kind):
    rep = persistency_bounds(ghz(4), kind, FAST)
    assert (rep.lower, rep.upper) == (1, 1)
    assert all(o.verdict == ABSENT for _, o in rep.witness_per_k[1])


def test_dicke_ge_both_paths():
    slow = persistency_bounds(dicke4(), "GE", FAST)
    fast = persistency_bounds(dicke4(), "GE", dataclasses.replace(FAST, tau_min=DICKE_COORDS))
    assert slow.lower == fast.lower == 3
    assert fast.upper == 3 and "fast path" in fast.note


def test_w4_entanglement():
    rep = persistency_bounds(w_state(4), "E", FAST)
    assert (rep.lower, rep.upper) == (3, 3)


def test_w4_genuine_steering_lower_bound():
    rep = persistency_bounds(w_state(4), "GS", FAST)
    assert rep.lower >= 2
    assert rep.upper == UNCERTIFIED
    assert not rep.upper_certified


def test_cluster_entanglement():
    rep = persistency_bounds(cluster4(), "E", FAST)
    assert (rep.lower, rep.upper) == (2, 2)


def test_subsets_are_exhaustive():
    rep = persistency_bounds(cluster4(), "E", dataclasses.replace(FAST, use_symmetry=False))
    assert [s for s, _ in rep.witness_per_k[1]] == [(1,), (2,), (3,), (4,)]
    assert len(rep.witness_per_k[2]) == 6


def test_symmetry_shortcut_agrees():
    a = persistency_bounds(w_state(4), "E", FAST)
    b = persistency_bounds(w_state(4), "E", dataclasses.replace(FAST, use_symmetry=False))
    assert (a.lower, a.upper) == (b.lower, b.upper)
    assert "symmetric" in a.note and not b.note


def test_symmetry_check():
    assert is_permutation_symmetric(dm(w_state(4)))
    assert is_permutation_symmetric(dm(dicke4()))
    assert not is_permutation_symmetric(dm(cluster4()))


def test_deterministic(monkeypatch):
    monkeypatch.setenv("CORRSIST_THREADS", "1")
    one = persistency_bounds(cluster4(), "E", FAST).as_dict()
    monkeypatch.setenv("CORRSIST_THREADS", "4")
    assert persistency_bounds(cluster4(), "E", FAST).as_dict() == one


def test_ge_needs_small_marginals():
    with pytest.raises(PersistencyError):
        detect(dm(ghz(4)), "GE")
    with pytest.raises(PersistencyError):
        persistency_bounds(np.eye(2) / 2, "E")


def test_nl_two_qubits():
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert detect(dm(phi), "NL").verdict == DETECTED
    assert detect(np.eye(4) / 4, "NL").verdict != DETECTED


def test_filter_search_is_bounded():
    rho = partial_trace(w_state(4), [1])
    eps, value = best_shared_filter(np.asarray(rho), lambda m: -np.trace(m @ m).real)
    assert 0 < eps <= 1


def _report(kind, lower, upper, fp="x"):
    return PersistencyReport(PropertyKind(kind), 4, lower, upper, {}, fp)


class TestHierarchy:
    def test_consistent(self):
        assert hierarchy_validate([_report("E", 3, 3), _report("S", 2, UNCERTIFIED), _report("NL", 1, 1)]) == []

    def test_violation_reported(self):
        out = hierarchy_validate([_report("E", 1, 1), _report("S", 2, UNCERTIFIED)])
        assert out and "P_E" in out[0]

    def test_uncertified_upper_never_violates(self):
        assert hierarchy_validate([_report("E", 1, UNCERTIFIED), _report("S", 3, 3)]) == []

    def test_mixed_states_rejected(self):
        with pytest.raises(PersistencyError):
            hierarchy_validate([_report("E", 1, 1, "a"), _report("S", 1, 1, "b")])

    def test_real_reports(self):
        reps = [persistency_bounds(w_state(4), k, FAST) for k in ("E", "GE", "S")]
        assert len({r.fingerprint for r in reps}) == 1
        assert reps[0].fingerprint == fingerprint(w_state(4))
        assert hierarchy_validate(reps) == []
