import numpy as np
import pytest
from hypothesis import given
from strategies import random_product_dm, random_tau_min, tau_min_coords

from corrsist.entdetect import (
    ABSENT,
    DETECTED,
    TauMinCoords,
    cond_max_persistency,
    cond_persist_e,
    cond_persist_ge,
    conditions_grid,
    detect_entanglement_2q,
    detect_entanglement_3q,
    detect_ge_3q,
    ge_witness_values,
    s_values,
)
from corrsist.families import (
    BELL_PAIR_COORDS,
    DICKE_COORDS,
    GHZ_COORDS,
    cluster4,
    ghz,
    tau_min_reduced,
    w_state,
)
from corrsist.qstate import StateError, partial_trace


def dm(v):
    return np.outer(v, np.conj(v))


GHZ_DIAG = np.diag([0.5, 0, 0, 0, 0, 0, 0, 0.5])


class TestClosedForms:
    def test_condition_ge(self):
        assert not cond_persist_ge(GHZ_COORDS)
        assert cond_persist_ge(DICKE_COORDS)
        assert not cond_persist_ge(BELL_PAIR_COORDS)

    def test_condition_e(self):
        assert not cond_persist_e(GHZ_COORDS)
        assert cond_persist_e(DICKE_COORDS)

    def test_condition_e_zero_sign_counts_positive(self):
        # x0 x1 = 0 uses the + branch: |x2^2 - x3^2| > x0^2 - x1^2 + 4 min max = x0^2
        c = TauMinCoords((0.6, 0.0, 0.8, 0.0))
        assert cond_persist_e(c) == (0.64 > 0.36)

    def test_dicke_s_values(self):
        s = s_values(DICKE_COORDS)
        for v in (s.s1, s.s2, s.s3):
            assert v == pytest.approx(1 / 3, abs=1e-12)
        assert cond_max_persistency(DICKE_COORDS) == {"pge_max": True, "pe_max": True}

    def test_ghz_and_product(self):
        # the second S3 branch is |(x0+x1)(x0-x1)|/2 - 0 = 0 at GHZ, so S3 = 0, not positive
        assert s_values(GHZ_COORDS).s3 == pytest.approx(0, abs=1e-15)
        assert not s_values(GHZ_COORDS).all_positive()
        s = s_values(BELL_PAIR_COORDS)
        assert s.s1 < 0 and s.s2 < 0
        assert cond_max_persistency(GHZ_COORDS) == {"pge_max": False, "pe_max": False}
        assert cond_max_persistency(BELL_PAIR_COORDS) == {"pge_max": False, "pe_max": False}

    @given(tau_min_coords)
    def test_sign_flip_invariance(self, c):
        flipped = TauMinCoords(-c.array)
        assert cond_persist_ge(c) == cond_persist_ge(flipped)
        assert cond_persist_e(c) == cond_persist_e(flipped)
        assert s_values(c) == pytest.approx(s_values(flipped))

    def test_grid_matches_scalar(self, rng):
        xs = np.array([random_tau_min(rng).array for _ in range(200)])
        g = conditions_grid(*xs.T)
        for i, x in enumerate(xs):
            c = TauMinCoords(x)
            assert g["cond1"][i] == cond_persist_ge(c)
            assert g["cond2"][i] == cond_persist_e(c)
            s = s_values(c)
            assert (g["s1"][i], g["s2"][i], g["s3"][i]) == pytest.approx((s.s1, s.s2, s.s3))
            assert g["pge_max"][i] == cond_max_persistency(c)["pge_max"]


class TestDetectors:
    def test_ghz_diagonal_reduction(self):
        assert detect_entanglement_3q(GHZ_DIAG).verdict == ABSENT
        assert detect_ge_3q(GHZ_DIAG).verdict == ABSENT

    def test_w3(self):
        assert detect_entanglement_3q(dm(w_state(3))).verdict == DETECTED
        assert detect_ge_3q(dm(w_state(3))).verdict == DETECTED

    def test_ghz3(self):
        out = detect_ge_3q(dm(ghz(3)))
        assert out.verdict == DETECTED
        assert "ghz" in out.evidence

    def test_cluster_one_loss_never_detected(self):
        for q in range(1, 5):
            assert detect_ge_3q(partial_trace(cluster4(), [q])).verdict != DETECTED

    def test_two_qubit(self):
        phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
        assert detect_entanglement_2q(dm(phi)).verdict == DETECTED
        assert detect_entanglement_2q(np.eye(4) / 4).verdict == ABSENT

    def test_arity(self):
        with pytest.raises(StateError):
            detect_ge_3q(np.eye(4) / 4)
        with pytest.raises(StateError):
            detect_entanglement_3q(np.eye(4) / 4)

    def test_soundness_on_products(self, rng):
        for _ in range(1000):
            rho = random_product_dm(rng, 3)
            assert detect_ge_3q(rho).verdict != DETECTED
            assert detect_entanglement_3q(rho).verdict != DETECTED

    def test_witness_frames_only_help(self, rng):
        rho = dm(w_state(3))
        assert ge_witness_values(rho)["w"] >= ge_witness_values(rho, frames=False)["w"] - 1e-12


def _condition_one_misses(n=500, seed=7):
    rng = np.random.default_rng(seed)
    misses, seen = [], 0
    while seen < n:
        c = random_tau_min(rng)
        if not cond_persist_ge(c):
            continue
        seen += 1
        verdicts = [detect_ge_3q(tau_min_reduced(c, 1, q)).verdict for q in range(1, 5)]
        if any(v != DETECTED for v in verdicts):
            misses.append((np.round(c.array, 4).tolist(), verdicts))
    return misses


def test_condition_one_misses_are_inconclusive_not_absent():
    # whatever the witnesses miss must never be certified as biseparable
    for _, verdicts in _condition_one_misses(100):
        assert ABSENT not in verdicts


@pytest.mark.xfail(strict=True, reason="the two matrix-element witnesses miss about 10% of Condition-1 points")
def test_condition_one_consistent_with_witnesses():
    misses = _condition_one_misses()
    print(f"{len(misses)} of 500 Condition-1 points have an undetected one-loss reduction; first: {misses[:3]}")
    assert not misses
