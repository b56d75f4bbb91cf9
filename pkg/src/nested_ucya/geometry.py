"""Uniform circular cylindrical array (UCyA) geometry and steering vectors.

The array is a stack of ``M_v`` uniform circular arrays (UCAs), ``M_h``
elements each, radius ``r`` and vertical pitch ``h``. Lengths are stored in
wavelengths, so all phase terms use ``r/lambda`` and ``h/lambda`` directly.

Angles are radians: elevation ``theta`` in (0, pi) measured from the array
axis, azimuth ``phi`` in [0, 2*pi).

Flattening follows ``a_v kron a_h``: the horizontal element index runs
fastest, so element ``(m_v, m_h)`` (0-based) sits at ``m_v * M_h + m_h``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ArrayConfig:
    """UCyA geometry.

    Attributes:
        M_v: Number of stacked UCAs.
        M_h: Elements per UCA.
        r: Radius in wavelengths.
        h: Vertical spacing in wavelengths.
        wavelength: Carrier wavelength in meters. Informational only.
    """

    M_v: int = 25
    M_h: int = 30
    r: float = 2.0
    h: float = 0.5
    wavelength: float = 299_792_458.0 / 28e9

    def __post_init__(self):
        if self.M_v < 2:
            raise ValueError(f"M_v must be at least 2, got {self.M_v}")
        if self.r <= 0 or self.h <= 0:
            raise ValueError("radius r and spacing h must be positive")
        need = math.floor(4 * math.pi * self.r)
        if self.M_h < need:
            raise ValueError(
                f"M_h={self.M_h} is below floor(4*pi*r/lambda)={need}; "
                "the phase-mode approximation needs more elements per ring"
            )

    @property
    def M_bs(self) -> int:
        return self.M_v * self.M_h

    @property
    def element_angles(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.M_h) / self.M_h


def _check_theta(theta):
    theta = np.asarray(theta, dtype=float)
    if np.any((theta <= 0) | (theta >= np.pi)):
        raise ValueError("elevation must lie strictly inside (0, pi)")
    return theta


def vertical_steering(theta: float, cfg: ArrayConfig) -> np.ndarray:
    """Unit-norm vertical steering vector, length ``M_v``."""
    m = np.arange(cfg.M_v)
    return np.exp(-2j * np.pi * cfg.h * m * np.cos(theta)) / np.sqrt(cfg.M_v)


def ring_steering(theta: float, phi: float, M_h: int, r: float) -> np.ndarray:
    """Unit-norm steering vector of a single ring of ``M_h`` elements, radius ``r``."""
    gamma = 2 * np.pi * r * np.sin(theta)
    angles = 2 * np.pi * np.arange(M_h) / M_h
    return np.exp(1j * gamma * np.cos(phi - angles)) / np.sqrt(M_h)


def horizontal_steering(theta: float, phi: float, cfg: ArrayConfig) -> np.ndarray:
    """Unit-norm steering vector of one ring, length ``M_h``."""
    return ring_steering(theta, phi, cfg.M_h, cfg.r)


def full_steering(theta: float, phi: float, cfg: ArrayConfig) -> np.ndarray:
    """``a_v kron a_h``, length ``M_v * M_h``."""
    return np.kron(vertical_steering(theta, cfg), horizontal_steering(theta, phi, cfg))


def angular_distance(theta1, phi1, theta2, phi2):
    """Great-circle distance between directions, radians."""
    c = np.cos(theta1) * np.cos(theta2) + np.sin(theta1) * np.sin(theta2) * np.cos(phi1 - phi2)
    return np.arccos(np.clip(c, -1.0, 1.0))


@dataclass(frozen=True)
class SourceSet:
    """Ground-truth device directions in radians."""

    theta: np.ndarray
    phi: np.ndarray
    power: np.ndarray = field(default=None)  # mean power per device; 1 when omitted

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        phi = np.mod(np.atleast_1d(np.asarray(self.phi, dtype=float)), 2 * np.pi)
        if theta.shape != phi.shape or theta.ndim != 1 or theta.size < 1:
            raise ValueError("theta and phi must be equal-length non-empty 1-D arrays")
        _check_theta(theta)
        power = np.ones_like(theta) if self.power is None else np.asarray(self.power, float)
        if power.shape != theta.shape or np.any(power <= 0):
            raise ValueError("power must be positive, one value per device")
        for i in range(theta.size):
            for j in range(i + 1, theta.size):
                if angular_distance(theta[i], phi[i], theta[j], phi[j]) < 1e-9:
                    raise ValueError(f"devices {i} and {j} share a direction")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "power", power)

    @property
    def K(self) -> int:
        return self.theta.size

    @classmethod
    def from_degrees(cls, theta_deg, phi_deg, power=None) -> "SourceSet":
        return cls(np.radians(theta_deg), np.radians(phi_deg), power)


def random_sources(
    K: int,
    rng: np.random.Generator,
    min_separation: float = np.radians(5.0),
    theta_range: tuple[float, float] = (np.radians(30.0), np.radians(150.0)),
    max_tries: int = 100_000,
) -> SourceSet:
    """Draw ``K`` directions uniformly, rejecting any closer than ``min_separation``.

    Separation is checked both as great-circle distance and in elevation alone,
    since elevations are estimated first and must be distinguishable.
    """
    lo, hi = theta_range
    theta, phi = [], []
    tries = 0
    while len(theta) < K:
        tries += 1
        if tries > max_tries:
            raise RuntimeError(f"could not place {K} devices {np.degrees(min_separation):.1f} deg apart")
        t = rng.uniform(lo, hi)
        p = rng.uniform(0.0, 2 * np.pi)
        if all(
            abs(t - t2) >= min_separation / 4 and angular_distance(t, p, t2, p2) >= min_separation
            for t2, p2 in zip(theta, phi)
        ):
            theta.append(t)
            phi.append(p)
    return SourceSet(np.array(theta), np.array(phi))
