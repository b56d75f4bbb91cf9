"""Spatial smoothing along the vertical coarray lag.

Overlapping windows of ``N_ss`` vertical lags are cut from the measurement
tensor and stacked along the time mode. Each window sees the same devices
with a per-device phase ramp, so stacking restores the mode-3 rank lost
when device powers do not change between frames.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import ComplexTensor, mode_n_product, n_ranks


@dataclass(frozen=True)
class SmoothedTensor:
    Y_ss: ComplexTensor
    N_is: int
    N_ss: int


def selection_matrix(n_is: int, N_ss: int, N_vdc: int) -> np.ndarray:
    """``[0 | I_{N_ss} | 0]`` picking rows ``n_is .. n_is + N_ss - 1`` (1-based)."""
    if N_ss < 1 or n_is < 1 or n_is + N_ss - 1 > N_vdc:
        raise ValueError(f"window of {N_ss} rows at {n_is} does not fit {N_vdc} rows")
    J = np.zeros((N_ss, N_vdc))
    J[np.arange(N_ss), n_is - 1 + np.arange(N_ss)] = 1.0
    return J


def subtensor(Y_df, n_is: int, N_ss: int) -> ComplexTensor:
    """Mode-1 window starting at row ``n_is`` (1-based)."""
    Y = Y_df if isinstance(Y_df, ComplexTensor) else ComplexTensor(Y_df)
    return mode_n_product(Y, selection_matrix(n_is, N_ss, Y.shape[0]), 1)


def spatial_smooth(Y_df, N_is: int | None = None) -> SmoothedTensor:
    """Stack the ``N_is`` windows along mode 3, ``n_is`` ascending.

    The default splits the rows evenly, ``N_is = N_ss = (N_vdc + 1) / 2``.
    """
    Y = Y_df if isinstance(Y_df, ComplexTensor) else ComplexTensor(Y_df)
    N_vdc = Y.shape[0]
    if N_is is None:
        N_is = (N_vdc + 1) // 2
    if not 1 <= N_is <= N_vdc:
        raise ValueError(f"N_is={N_is} must lie in 1..{N_vdc}")
    N_ss = N_vdc - N_is + 1
    # plain slicing; equivalent to the selection-matrix products
    blocks = [Y.data[n : n + N_ss] for n in range(N_is)]
    return SmoothedTensor(ComplexTensor(np.concatenate(blocks, axis=2)), N_is, N_ss)


def verify_nranks(Y_ss, K: int, rel_tol: float = 1e-8) -> tuple[tuple[int, ...], bool]:
    """Numeric n-ranks and whether every one reaches ``K``."""
    Y = Y_ss.Y_ss if isinstance(Y_ss, SmoothedTensor) else Y_ss
    ranks = n_ranks(Y, rel_tol)
    return ranks, all(r >= K for r in ranks)
