"""Fast invariant checks runnable without the test suite."""

from __future__ import annotations

import numpy as np

from .coarray import CoarrayModel, coarray_vectorize, expected_autocorrelation, expected_measurement_tensor
from .design import coarray_holes, solve_rf_allocation
from .estimator import estimate_doas, psi_to_theta
from .geometry import ArrayConfig, SourceSet
from .metrics import matched_errors
from .phase_space import PhaseSpaceConfig, bessel_j
from .smoothing import spatial_smooth
from .tensor import ComplexTensor, fold, truncated_hosvd, unfold


def _tensor_identities() -> bool:
    rng = np.random.default_rng(0)
    t = ComplexTensor(rng.standard_normal((3, 4, 5)) + 1j * rng.standard_normal((3, 4, 5)))
    ok = all(fold(unfold(t, n), n, t.shape).allclose(t, rtol=0, atol=0) for n in (1, 2, 3))
    ok &= all(np.isclose(np.linalg.norm(unfold(t, n)), t.norm()) for n in (1, 2, 3))
    rec = truncated_hosvd(t, (3, 4, 5)).reconstruct()
    return ok and np.linalg.norm(rec.data - t.data) <= 1e-10 * t.norm()


def _rf_counts() -> bool:
    return (solve_rf_allocation(17, 29, smoothing=False).M_rf == 32
            and solve_rf_allocation(25, 29, smoothing=True).M_rf == 54)


def _hole_free() -> bool:
    return all(not coarray_holes(solve_rf_allocation(v, h)) for v in (4, 9, 17) for h in (5, 15, 29))


def _bessel() -> bool:
    return abs(bessel_j(1, 1.0) - 0.44005058574493355) < 1e-12 and bessel_j(0, 0.0) == 1.0


def _elevation_round_trip() -> bool:
    theta = np.radians(np.arange(5.0, 176.0, 5.0))
    back, _, _ = psi_to_theta(np.exp(-1j * np.pi * np.cos(theta)), 0.5)
    return np.max(np.abs(back - theta)) <= 1e-12


def _desk_model():
    cfg = ArrayConfig(M_v=8, M_h=12, r=1.0)
    ps = PhaseSpaceConfig.from_array(cfg, 7)
    return CoarrayModel(cfg, ps, solve_rf_allocation(ps.M_vr, ps.M_hr))


def _coarray_oracle() -> bool:
    model = _desk_model()
    src = SourceSet.from_degrees([70.0, 110.0], [30.0, 250.0], [1.0, 0.5])
    y = coarray_vectorize(expected_autocorrelation(src, model), model.cmap, subtract_noise=False).y_df
    ref = sum(p * np.kron(model.vertical_steering(t), model.horizontal_steering(t, f))
              for t, f, p in zip(src.theta, src.phi, src.power))
    return np.max(np.abs(y - ref)) <= 1e-10


def _noiseless_recovery() -> bool:
    model = _desk_model()
    src = SourceSet.from_degrees([60.0, 100.0, 130.0], [40.0, 200.0, 300.0])
    powers = np.random.default_rng(1).uniform(0.5, 2.0, (20, 3))
    Y = expected_measurement_tensor(src, model, powers)
    est = estimate_doas(spatial_smooth(Y.Y_df), 3, model)
    d_az, d_el = matched_errors(src.theta, src.phi, est.theta, est.phi)
    return max(d_az.max(), d_el.max()) <= 1e-3


CHECKS = [
    ("tensor unfold/fold, norms, HOSVD", _tensor_identities),
    ("RF-chain counts 32 and 54", _rf_counts),
    ("solver designs are hole-free", _hole_free),
    ("Bessel values", _bessel),
    ("elevation round trip", _elevation_round_trip),
    ("coarray vs Khatri-Rao oracle", _coarray_oracle),
    ("noiseless recovery, desk array", _noiseless_recovery),
]


def run_all() -> bool:
    ok = True
    for name, check in CHECKS:
        passed = bool(check())
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}")
    return ok
