"""Phase-mode transform of a uniform circular array.

The horizontal phase shifters map the ``M_h`` ring outputs onto ``2P+1``
phase-mode ports ``p = -P..P``. Port ``p`` sees approximately
``sqrt(M_h) j^p J_p(gamma) exp(-j p phi)`` with ``gamma = 2 pi r sin(theta)``,
so its phase is linear in the port index. This module holds the Bessel
evaluation, the choice of ``P``, the transform matrix and both the exact and
the Bessel-model port responses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import ArrayConfig, ring_steering

MAX_ORDER = 512
MAX_ARG = 500.0


def bessel_j_table(n_max: int, x: float) -> np.ndarray:
    """``[J_0(x), ..., J_{n_max}(x)]`` by Miller's backward recurrence.

    The recurrence ``J_{k-1} = (2k/x) J_k - J_{k+1}`` is run downward from an
    order well above both ``n_max`` and ``x`` and normalized with
    ``J_0 + 2 * sum_k J_{2k} = 1``.
    """
    n_max = int(n_max)
    x = float(x)
    if n_max < 0 or n_max > MAX_ORDER:
        raise ValueError(f"order {n_max} outside supported range 0..{MAX_ORDER}")
    if not 0.0 <= x <= MAX_ARG or math.isnan(x):
        raise ValueError(f"argument {x} outside supported range [0, {MAX_ARG}]")
    out = np.zeros(n_max + 1)
    if x == 0.0:
        out[0] = 1.0
        return out
    if x < 1e-8:
        # leading series term; the next one is smaller by x^2 / 4
        n = np.arange(n_max + 1)
        out[:] = np.exp(n * math.log(x / 2) - np.array([math.lgamma(k + 1) for k in n]))
        out[0] = 1.0 - x * x / 4
        return out
    top = max(n_max, math.ceil(x))
    start = top + 30 + int(6 * math.sqrt(top))
    start += start % 2
    j_next, j_cur = 0.0, 1e-300
    norm = 0.0
    for k in range(start, 0, -1):
        j_prev = (2.0 * k / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        # j_cur now holds the unnormalized J_{k-1}
        if k - 1 <= n_max:
            out[k - 1] = j_cur
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j_cur
        if abs(j_cur) > 1e250:
            j_cur *= 1e-250
            j_next *= 1e-250
            norm *= 1e-250
            out *= 1e-250
    norm += j_cur
    return out / norm


def bessel_j(p: int, x: float) -> float:
    """Bessel function of the first kind, integer order ``p``, argument ``x >= 0``."""
    p = int(p)
    value = bessel_j_table(abs(p), x)[abs(p)]
    return -value if (p < 0 and p % 2) else float(value)


def bessel_j_orders(orders, x: float) -> np.ndarray:
    """``J_p(x)`` for every integer ``p`` in ``orders`` (negative orders allowed)."""
    orders = np.asarray(orders, dtype=int)
    table = bessel_j_table(int(np.abs(orders).max(initial=0)), x)
    vals = table[np.abs(orders)]
    return np.where((orders < 0) & (orders % 2 == 1), -vals, vals)


def choose_P(cfg: ArrayConfig, P: int | None = None) -> int:
    """Highest phase-mode order.

    The default is ``floor(2 pi r) + 1``, the smallest order above the ring's
    electrical size. A caller value must be at least that and still give
    ``2P + 1 <= M_h`` ports.
    """
    p_min = math.floor(2 * math.pi * cfg.r) + 1
    P = p_min if P is None else int(P)
    if P < p_min:
        raise ValueError(f"P={P} must exceed floor(2*pi*r/lambda)={p_min - 1}")
    if 2 * P + 1 > cfg.M_h:
        raise ValueError(f"2P+1={2 * P + 1} ports exceed M_h={cfg.M_h} ring elements")
    return P


@dataclass(frozen=True)
class PhaseSpaceConfig:
    """Port layout after the phase shifters.

    ``M_hr = 2P+1`` horizontal ports and ``M_vr = M_v`` vertical ports (the
    vertical transform is the identity).
    """

    P: int
    M_v: int
    M_h: int
    r: float

    def __post_init__(self):
        p_min = math.floor(2 * math.pi * self.r) + 1
        if self.P < p_min:
            raise ValueError(f"P={self.P} must exceed floor(2*pi*r/lambda)={p_min - 1}")

    @classmethod
    def from_array(cls, cfg: ArrayConfig, P: int | None = None) -> "PhaseSpaceConfig":
        if P is None:
            P = choose_P(cfg)
        return cls(P=int(P), M_v=cfg.M_v, M_h=cfg.M_h, r=cfg.r)

    @property
    def M_hr(self) -> int:
        return 2 * self.P + 1

    @property
    def M_vr(self) -> int:
        return self.M_v

    @property
    def ports(self) -> np.ndarray:
        return np.arange(-self.P, self.P + 1)

    @property
    def transform_realizable(self) -> bool:
        """True when the ``2P+1`` ports are distinct DFT columns of the ring."""
        return self.M_hr <= self.M_h

    def gamma(self, theta) -> np.ndarray:
        return 2 * np.pi * self.r * np.sin(theta)


def build_Bhps(M_h: int, P: int) -> np.ndarray:
    """``M_h x (2P+1)`` phase-shifter matrix; column ``p + P`` holds mode ``p``."""
    if 2 * P + 1 > M_h:
        raise ValueError(f"2P+1={2 * P + 1} exceeds M_h={M_h}")
    m = np.arange(M_h)[:, None]
    p = np.arange(-P, P + 1)[None, :]
    return np.exp(-2j * np.pi * m * p / M_h)


def phase_space_steering(theta: float, phi: float, ps: PhaseSpaceConfig, mode: str = "exact") -> np.ndarray:
    """Response of the ``2P+1`` horizontal ports to one plane wave.

    ``exact`` combines the ring outputs with the weights of :func:`build_Bhps`,
    port ``p`` receiving ``sum_m B[m, p] a_h[m]``. ``approx`` is the Bessel
    model ``sqrt(M_h) j^p J_p(gamma) exp(-j p phi)``.
    """
    if mode == "exact":
        return build_Bhps(ps.M_h, ps.P).T @ ring_steering(theta, phi, ps.M_h, ps.r)
    if mode == "approx":
        p = ps.ports
        amp = bessel_j_orders(p, float(ps.gamma(theta)))
        return np.sqrt(ps.M_h) * (1j ** np.mod(p, 4)) * amp * np.exp(-1j * p * phi)
    raise ValueError(f"unknown mode {mode!r}; use 'exact' or 'approx'")
