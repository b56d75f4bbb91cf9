"""Matching estimates to ground truth and angle errors."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import angular_distance


def match(theta_true, phi_true, theta_est, phi_est) -> np.ndarray:
    """Index into the estimates for each true device, by minimum total great-circle distance."""
    tt, pt = np.asarray(theta_true, float), np.asarray(phi_true, float)
    te, pe = np.asarray(theta_est, float), np.asarray(phi_est, float)
    if tt.shape != te.shape:
        raise ValueError(f"{tt.size} true devices but {te.size} estimates")
    cost = angular_distance(tt[:, None], pt[:, None], te[None, :], pe[None, :])
    rows, cols = linear_sum_assignment(cost)
    out = np.empty(tt.size, dtype=int)
    out[rows] = cols
    return out


def wrap_azimuth_error(dphi) -> np.ndarray:
    d = np.abs(np.mod(np.asarray(dphi, float), 2 * np.pi))
    return np.minimum(d, 2 * np.pi - d)


def matched_errors(theta_true, phi_true, theta_est, phi_est) -> tuple[np.ndarray, np.ndarray]:
    """Per-device ``(azimuth, elevation)`` absolute errors in radians after matching."""
    idx = match(theta_true, phi_true, theta_est, phi_est)
    d_az = wrap_azimuth_error(np.asarray(phi_est, float)[idx] - np.asarray(phi_true, float))
    d_el = np.abs(np.asarray(theta_est, float)[idx] - np.asarray(theta_true, float))
    return d_az, d_el


def rmse(theta_true, phi_true, theta_est, phi_est) -> tuple[float, float]:
    """``(rmse_az, rmse_el)`` in degrees."""
    d_az, d_el = matched_errors(theta_true, phi_true, theta_est, phi_est)
    return (float(np.degrees(np.sqrt(np.mean(d_az**2)))),
            float(np.degrees(np.sqrt(np.mean(d_el**2)))))
