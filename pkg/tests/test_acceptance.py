"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line with the measured
quantities and wall time, then asserts.  Run with ``pytest tests/test_acceptance.py``.
"""

import time

import numpy as np
import pytest

from corrsist import bell, entdetect, persistency, scan, steering
from corrsist.families import (
    DICKE_COORDS,
    GenericACoords,
    MClassCoords,
    TauMinCoords,
    direct_reduction,
    dicke4,
    generic_a_state,
    ghz,
    m_class_state,
    tau_min_reduced,
    tau_min_state,
    w_loss_mixture,
    w_state,
)
from corrsist.qstate import LocalFilter, MeasurementBattery, apply_filter, random_qubit_dm
from corrsist.tangles import random_generic_z, random_m_class, tau_aggregates

pytestmark = pytest.mark.slow


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail, t0):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail} ({time.perf_counter() - t0:.2f} s)")
        assert ok, detail
    return emit


def _random_tau_min(rng):
    x = rng.normal(size=4)
    return TauMinCoords(x / np.linalg.norm(x))


def test_criterion_01_tangle_identities(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    resid = tau1 = tau2_out = 0.0
    for _ in range(1000):
        s = tau_aggregates(np.asarray(generic_a_state(GenericACoords(random_generic_z(rng))).amplitudes))
        resid = max(resid, abs(s.tau4 - (4 * s.tau1 - 3 * s.tau2)))
        tau1 = max(tau1, abs(s.tau1 - 1))
        tau2_out = max(tau2_out, max(0.0, 1 - s.tau2, s.tau2 - 4 / 3))
    m_tau2 = m_tau4 = 0.0
    for _ in range(1000):
        p, theta = random_m_class(rng)
        s = tau_aggregates(np.asarray(m_class_state(MClassCoords(p, theta)).amplitudes))
        m_tau2 = max(m_tau2, abs(s.tau2 - 4 / 3))
        m_tau4 = max(m_tau4, s.tau4)
    t_tau2 = 0.0
    for _ in range(1000):
        s = tau_aggregates(np.asarray(tau_min_state(_random_tau_min(rng)).amplitudes))
        t_tau2 = max(t_tau2, abs(s.tau2 - 1))
    elapsed = time.perf_counter() - t0
    ok = (resid < 1e-9 and tau1 < 1e-9 and tau2_out <= 1e-9 and m_tau2 < 1e-9
          and m_tau4 < 1e-12 and t_tau2 < 1e-9 and elapsed < 10)
    verdict(1, ok, f"residual {resid:.1e}, |tau1-1| {tau1:.1e}, tau2 range excess {tau2_out:.1e}, "
                   f"M-class |tau2-4/3| {m_tau2:.1e} tau4 {m_tau4:.1e}, tau_min |tau2-1| {t_tau2:.1e}", t0)


def test_criterion_02_convention_lock(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(1000):
        c = _random_tau_min(rng)
        for k, idx in ((1, range(1, 5)), (2, range(1, 4))):
            for i in idx:
                worst = max(worst, np.max(np.abs(np.asarray(tau_min_reduced(c, k, i)) - direct_reduction(c, k, i))))
    verdict(2, worst < 1e-10, f"max entry difference {worst:.1e}", t0)


def test_criterion_03_ghz4_persistency(verdict):
    t0 = time.perf_counter()
    reps = {k: persistency.persistency_bounds(ghz(4), k) for k in ("E", "GE")}
    certified = all(o.verdict == entdetect.ABSENT for r in reps.values() for _, o in r.witness_per_k[1])
    elapsed = time.perf_counter() - t0
    ok = all((r.lower, r.upper) == (1, 1) for r in reps.values()) and certified and elapsed < 1
    detail = ", ".join(f"P_{k} in [{r.lower}, {r.upper}]" for k, r in reps.items())
    verdict(3, ok, f"{detail}, one-loss reductions certified absent: {certified}", t0)


def test_criterion_04_dicke_maximal(verdict):
    t0 = time.perf_counter()
    cond = entdetect.cond_persist_ge(DICKE_COORDS)
    s = entdetect.s_values(DICKE_COORDS)
    s_err = max(abs(v - 1 / 3) for v in (s.s1, s.s2, s.s3))
    rep = persistency.persistency_bounds(dicke4(), "GE", persistency.PersistencyOptions(use_symmetry=False))
    ok = cond and s_err < 1e-12 and rep.lower == 3
    verdict(4, ok, f"condition 1 {cond}, |S_i - 1/3| {s_err:.1e}, P_GE lower {rep.lower}", t0)


def test_criterion_05_facet4_closed_form(verdict):
    t0 = time.perf_counter()
    ineq = bell.builtin_inequality("facet4")
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        c = _random_tau_min(rng)
        for w in range(1, 5):
            value, _ = bell.maximize_bell(ineq, tau_min_reduced(c, 1, w), restarts=8, seed=0)
            worst = max(worst, abs(value - bell.facet4_closed_max(c, w)))
    axis = np.linspace(-1, 1, 50)
    x0, x1, x2 = (a.ravel() for a in np.meshgrid(axis, axis, axis, indexing="ij"))
    rad = 1 - x0**2 - x1**2 - x2**2
    ok_pts = rad >= 0
    grid_max = -np.inf
    for sign in (1, -1):
        vals = bell.facet4_closed_max_grid(x0[ok_pts], x1[ok_pts], x2[ok_pts], sign * np.sqrt(rad[ok_pts]))
        grid_max = max(grid_max, float(np.max(vals)))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-3 and grid_max <= 2 + 1e-9 and elapsed < 300
    verdict(5, ok, f"closed form vs see-saw worst {worst:.1e}; max over grid of min_i B_max {grid_max:.9f}", t0)


def test_criterion_06_b16_chain(verdict):
    t0 = time.perf_counter()
    ineq = bell.builtin_inequality("b16")
    value, bat = bell.maximize_bell(ineq, w_state(3), restarts=64, seed=0)
    vecs = [bat.bloch_array(p) for p in range(3)]
    worst = 0.0
    for p in (0.75, 0.3):
        for eps in (0.1, 0.01):
            filtered, _ = apply_filter(w_loss_mixture(p), LocalFilter.diag_eps(eps, 3))
            worst = max(worst, abs(bell.bell_value(ineq, filtered, vecs) - bell.b16_filtered_formula(p, eps)))
    small = bell.b16_filtered_formula(0.75, 1e-3)
    ok = abs(value - 4.72678) < 1e-3 and worst < 1e-3 and small > 4.7
    verdict(6, ok, f"W3 see-saw {value:.6f}; formula vs direct worst {worst:.1e}; eps=1e-3 value {small:.5f}", t0)


def test_criterion_07_lp_oracles(verdict):
    t0 = time.perf_counter()
    chsh = bell.vertex_max(bell.builtin_inequality("chsh"), bell.local_vertices(bell.Scenario(2, 2)))
    f4 = bell.vertex_max(bell.builtin_inequality("facet4"), bell.local_vertices(bell.Scenario(3, 2)))
    b16 = bell.vertex_max(bell.builtin_inequality("b16"), bell.ns2_vertices())
    rho = w_loss_mixture(0.75)
    inside = [bell.ns2_membership(bell.behavior(rho, MeasurementBattery.random(3, 2, np.random.default_rng([7, i]))))
              for i in range(100)]
    _, bat = bell.maximize_bell(bell.builtin_inequality("b16"), w_state(3), restarts=16, seed=0)
    w3 = bell.ns2_membership(bell.behavior(w_state(3), bat))
    elapsed = time.perf_counter() - t0
    ok = (abs(chsh - 2) < 1e-12 and abs(f4 - 2) < 1e-12 and abs(b16 - 4) < 1e-12
          and set(inside) == {"Inside"} and w3 == "Outside" and elapsed < 120)
    verdict(7, ok, f"vertex maxima CHSH {chsh:.12g}, facet4 {f4:.12g}, B16 {b16:.12g}; "
                   f"rho(3/4) Inside {inside.count('Inside')}/100; W3 optimum {w3}", t0)


def test_criterion_08_genuine_steering(verdict):
    t0 = time.perf_counter()
    value, settings = steering.maximize_genuine_steering(w_loss_mixture(0.75), restarts=64, seed=0)
    rng = np.random.default_rng(8)
    product_max = -np.inf
    for _ in range(10_000):
        rho = np.kron(random_qubit_dm(rng), random_qubit_dm(rng))
        frames = [np.linalg.qr(rng.normal(size=(3, 3)))[0] for _ in range(2)]
        product_max = max(product_max, steering.product_s3_value(frames[0], frames[1], rho))
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    attain = steering.genuine_steering_value(
        np.kron(np.outer(phi, phi), np.diag([1.0, 0.0])),
        steering.GenuineSteeringSettings(np.eye(3), np.diag([1.0, -1.0, 1.0]), [(0, 0, 1)] * 3),
    )
    ok = value > 3 and settings.trusted_frames and product_max <= 1 + 1e-9 and abs(attain - 3) < 1e-12
    verdict(8, ok, f"rho(3/4) value {value:.6f}; product S3 max {product_max:.9f}; attainment {attain:.15f}", t0)


def test_criterion_09_scan(verdict, tmp_path):
    t0 = time.perf_counter()
    cols = scan.scan_tau_min(scan.ScanConfig(points=101, workers=8))
    out = tmp_path / "scan.csv"
    rows = scan.write_csv(cols, out)
    header = out.open().readline().strip()
    counts = scan.region_counts(cols)
    elapsed = time.perf_counter() - t0
    ok = header == ",".join(scan.COLUMNS) and rows > 0 and all(v > 0 for v in counts.values()) and elapsed < 600
    verdict(9, ok, f"{rows} rows; region sizes {counts}", t0)


def test_criterion_10_honest_bounds(verdict):
    t0 = time.perf_counter()
    rep = persistency.persistency_bounds(w_state(4), "GS")
    ok = rep.lower >= 2 and rep.upper == persistency.UNCERTIFIED
    verdict(10, ok, f"P_GS(W4) in [{rep.lower}, {rep.upper}]", t0)
