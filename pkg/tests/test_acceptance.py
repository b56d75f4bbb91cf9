"""End-to-end acceptance checks, one per criterion, each printing a PASS/FAIL line."""

import time

import numpy as np
import pytest
from scipy.stats import spearmanr

from nested_ucya import (
    ArrayConfig,
    CoarrayModel,
    NestedDesign,
    PhaseSpaceConfig,
    SourceSet,
    coarray_vectorize,
    estimate_doas,
    expected_autocorrelation,
    expected_measurement_tensor,
    phase_space_steering,
    solve_rf_allocation,
    spatial_smooth,
    verify_nranks,
)
from nested_ucya.coarray import coarray_steering, rf_steering
from nested_ucya.design import coarray_holes
from nested_ucya.estimator import psi_to_theta
from nested_ucya.experiment import ExperimentConfig, run_experiment, run_trial
from nested_ucya.metrics import matched_errors
from nested_ucya.phase_space import bessel_j
from nested_ucya.tensor import ComplexTensor, fold, n_ranks, truncated_hosvd, unfold


@pytest.fixture
def report(capsys):
    def emit(number, passed, detail):
        with capsys.disabled():
            print(f"\nCRITERION {number}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed
    return emit


def desk_model():
    cfg = ArrayConfig(M_v=8, M_h=12, r=1.0)
    ps = PhaseSpaceConfig.from_array(cfg, 7)
    return CoarrayModel(cfg, ps, solve_rf_allocation(ps.M_vr, ps.M_hr))


def test_rf_chain_counts(report):
    start = time.perf_counter()
    no_smooth = solve_rf_allocation(17, 29, smoothing=False, enforce_c4=False)
    layout_54 = NestedDesign(5, 5, 5, 6, 25, 29, smoothing=True)
    solved = solve_rf_allocation(25, 29, smoothing=True)
    secs = time.perf_counter() - start
    ok = no_smooth.M_rf == 32 and layout_54.M_rf == 54 and solved.M_rf == 54 and secs < 1
    assert report(1, ok, f"M_rf {no_smooth.M_rf} and {layout_54.M_rf} (solver {solved.M_rf}), {secs:.2f} s")


def test_hole_free_coarrays(report):
    start = time.perf_counter()
    checked, holes = 0, []
    for M_vr in range(2, 32):
        for M_hr in range(3, 32, 2):
            for smoothing in (True, False):
                for c4 in (False, True):
                    try:
                        d = solve_rf_allocation(M_vr, M_hr, smoothing, enforce_c4=c4)
                    except ValueError:
                        continue  # divisibility leaves nothing for M_vr < 3
                    checked += 1
                    if coarray_holes(d):
                        holes.append((M_vr, M_hr, smoothing, c4))
    secs = time.perf_counter() - start
    ok = not holes and secs < 10
    assert report(2, ok, f"{checked} designs, {len(holes)} with holes, {secs:.2f} s")


def test_phase_mode_approximation(report):
    start = time.perf_counter()
    ps = PhaseSpaceConfig(P=13, M_v=2, M_h=30, r=2.0)
    thetas = np.radians(np.linspace(5, 175, 10))
    phis = np.radians(np.arange(10) * 36.0 + 7.0)
    worst = 0.0
    for t in thetas:
        for p in phis:
            ex = phase_space_steering(t, p, ps, "exact")
            ap = phase_space_steering(t, p, ps, "approx")
            worst = max(worst, np.linalg.norm(ex - ap) / np.linalg.norm(ex))
    rho = np.linspace(0.1, 0.9, 9)
    vals = np.array([[bessel_j(v, v * r) for r in rho] for v in range(2, 21)])
    mono = bool(np.all(np.diff(vals, axis=1) > 0) and np.all(np.diff(vals, axis=0) < 0))
    secs = time.perf_counter() - start
    ok = worst <= 1e-2 and mono and secs < 5
    assert report(3, ok, f"max relative error {worst:.4f} (limit 0.01), monotonicity {mono}, {secs:.2f} s")


def test_smoothing_restores_rank(report):
    start = time.perf_counter()
    model = desk_model()
    src = SourceSet.from_degrees([60.0, 95.0, 125.0], [40.0, 200.0, 300.0])
    Y = expected_measurement_tensor(src, model, np.ones((8, 3))).Y_df
    before = n_ranks(Y)[2]
    after = {N_is: verify_nranks(spatial_smooth(Y, N_is), 3)[0] for N_is in range(3, 14)}
    secs = time.perf_counter() - start
    ok = before < 3 and all(r == (3, 3, 3) for r in after.values()) and secs < 5
    assert report(4, ok, f"mode-3 rank {before} before, n-ranks {after[3]} after (N_is 3..13), {secs:.2f} s")


def test_noiseless_recovery(report):
    start = time.perf_counter()
    model = desk_model()
    src = SourceSet.from_degrees([60.0, 100.0, 130.0], [40.0, 200.0, 300.0])
    powers = np.random.default_rng(1).uniform(0.5, 2.0, (20, 3))
    Y = expected_measurement_tensor(src, model, powers)
    est = estimate_doas(spatial_smooth(Y.Y_df), 3, model)
    d_az, d_el = matched_errors(src.theta, src.phi, est.theta, est.phi)
    worst = max(d_az.max(), d_el.max())
    secs = time.perf_counter() - start
    ok = worst <= 1e-3 and secs < 30
    assert report(5, ok, f"max error {worst:.2e} rad, {secs:.2f} s")


def test_monte_carlo_trends(report):
    start = time.perf_counter()
    cfg = ExperimentConfig(P=14, design=(5, 5, 5, 6), K=5, trials=100, seed=0, estimator="both")
    res = run_experiment(cfg)
    t_az, t_el = res.rmse("tensor")
    m_az, m_el = res.rmse("matrix")
    rho_az, rho_el = spearmanr(cfg.snr_db, t_az)[0], spearmanr(cfg.snr_db, t_el)[0]
    i0, i20 = cfg.snr_db.index(0.0), cfg.snr_db.index(20.0)
    secs = time.perf_counter() - start
    a = rho_az <= -0.8 and rho_el <= -0.8
    b = t_az[i0] <= m_az[i0] and t_el[i0] <= m_el[i0]
    c = t_az[i20] <= 1.0 and t_el[i20] <= 1.0
    ok = a and b and c and secs < 900
    detail = (f"(a) rho {rho_az:.2f}/{rho_el:.2f}; (b) 0 dB tensor {t_az[i0]:.3f}/{t_el[i0]:.3f} "
              f"vs matrix {m_az[i0]:.3f}/{m_el[i0]:.3f}; (c) 20 dB {t_az[i20]:.3f}/{t_el[i20]:.3f} deg; "
              f"{secs:.0f} s")
    assert report(6, ok, detail)


def test_many_devices(report):
    start = time.perf_counter()
    cfg = ExperimentConfig(P=14, design=(5, 5, 5, 6), K=20, power_mode="varying",
                           snr_db=(5.0,), trials=30, seed=0)
    model = cfg.model()
    good = total = 0
    for trial in range(cfg.trials):
        res = run_trial(cfg, 0, trial, model)[0]
        total += cfg.K
        if res.failure is None:
            good += int(np.sum((np.degrees(res.err_az) <= 2) & (np.degrees(res.err_el) <= 2)))
    secs = time.perf_counter() - start
    frac = good / total
    ok = frac >= 0.95 and model.design.M_rf == 54 and secs < 600
    assert report(7, ok, f"{good}/{total} devices within 2 deg ({frac:.1%}), {secs:.1f} s")


def test_oracle_equivalences(report):
    start = time.perf_counter()
    rng = np.random.default_rng(0)
    t = ComplexTensor(rng.standard_normal((3, 4, 5)) + 1j * rng.standard_normal((3, 4, 5)))
    tensor_ok = all(fold(unfold(t, n), n, t.shape).allclose(t, rtol=0) for n in (1, 2, 3))
    tensor_ok &= all(np.isclose(np.linalg.norm(unfold(t, n)), t.norm()) for n in (1, 2, 3))
    rec = truncated_hosvd(t, (3, 4, 5)).reconstruct()
    tensor_ok &= np.linalg.norm(rec.data - t.data) <= 1e-10 * t.norm()

    model = desk_model()
    src = SourceSet.from_degrees([70.0, 110.0], [30.0, 250.0], [1.0, 0.5])
    y = coarray_vectorize(expected_autocorrelation(src, model), model.cmap, subtract_noise=False).y_df
    A = rf_steering(src, model, "approx")
    M = A.shape[0]
    kr = np.stack([np.kron(A[:, k].conj(), A[:, k]) for k in range(2)], axis=1) @ src.power
    rows = model.cmap.weights * kr[model.cmap.pairs[:, 0] + model.cmap.pairs[:, 1] * M]
    ref = sum(p * np.kron(*coarray_steering(th, ph, model))
              for th, ph, p in zip(src.theta, src.phi, src.power))
    kr_err = max(np.max(np.abs(y - rows)), np.max(np.abs(y - ref)))

    grid = np.radians(np.arange(5.0, 176.0, 5.0))
    back = psi_to_theta(np.exp(-1j * np.pi * np.cos(grid)), 0.5)[0]
    el_err = np.max(np.abs(back - grid))
    secs = time.perf_counter() - start
    ok = tensor_ok and kr_err <= 1e-10 and el_err <= 1e-12 and secs < 60
    assert report(8, ok, f"tensor identities {tensor_ok}, Khatri-Rao {kr_err:.1e}, "
                         f"elevation round trip {el_err:.1e}, {secs:.2f} s")
