"""Sparse RF-chain allocation on the phase-shifter output ports.

The ``M_vr x M_hr`` port grid (vertical ring index by horizontal phase mode)
is sampled by a two-level nested array: a dense ``N_vd x N_hd`` block and a
sparse ``N_vs x N_hs`` lattice with strides ``(N_vd, N_hd)``. Both share one
port, so ``M_rf = N_vd N_hd + N_vs N_hs - 1`` RF chains are needed.

Coordinates are ``(m_v, m_h)`` integer pairs. ``m_h`` is the phase-mode order
of the port (``-P..P``). ``m_v`` is zero at the shared row; dense rows run
``-(N_vd-1)..0`` and sparse rows ``0, N_vd, ..., N_vd (N_vs-1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np


@dataclass(frozen=True)
class NestedDesign:
    N_vd: int
    N_hd: int
    N_vs: int
    N_hs: int
    M_vr: int
    M_hr: int
    smoothing: bool = True

    def __post_init__(self):
        if self.N_vd < 2 or self.N_hd < 2:
            raise ValueError("dense block must span more than one row and column (N_vd, N_hd > 1)")
        if self.N_hd % 2 == 0:
            raise ValueError(f"N_hd must be odd, got {self.N_hd}")
        if self.M_hr % 2 == 0:
            raise ValueError(f"M_hr must be odd, got {self.M_hr}")
        if self.N_vs < 1 or self.N_hs < 1:
            raise ValueError("sparse counts must be positive")
        if not vertical_ok(self.N_vd, self.N_vs, self.M_vr, self.smoothing):
            need = "N_vd*N_vs >= M_vr" if self.smoothing else "2*N_vd*N_vs - 1 >= M_vr"
            raise ValueError(f"vertical coarray too short: {need} fails")
        if self.N_hd * self.N_hs < self.M_hr:
            raise ValueError("horizontal coarray too short: N_hd*N_hs >= M_hr fails")

    @property
    def M_rf(self) -> int:
        return self.N_vd * self.N_hd + self.N_vs * self.N_hs - 1

    @property
    def P(self) -> int:
        return (self.M_hr - 1) // 2

    @property
    def half_extent(self) -> int:
        """``N_vd * N_vs``: vertical span of the physical layout."""
        return self.N_vd * self.N_vs

    @property
    def N_vdc(self) -> int:
        return 2 * self.N_vd * self.N_vs - 1

    @property
    def N_hdc(self) -> int:
        return self.M_hr

    @property
    def coarray_vertical_lags(self) -> np.ndarray:
        n = self.half_extent
        return np.arange(-(n - 1), n)

    @property
    def coarray_horizontal_lags(self) -> np.ndarray:
        return np.arange(-self.P, self.P + 1)

    @property
    def symmetric(self) -> bool:
        """Whether the sparse horizontal comb is symmetric about mode 0 (odd ``N_hs``)."""
        return self.N_hs % 2 == 1


def vertical_ok(N_vd: int, N_vs: int, M_vr: int, smoothing: bool) -> bool:
    if smoothing:
        return N_vd * N_vs >= M_vr
    return 2 * N_vd * N_vs - 1 >= M_vr


def _min_vs(N_vd: int, M_vr: int, smoothing: bool) -> int:
    if smoothing:
        return math.ceil(M_vr / N_vd)
    return max(1, math.ceil((M_vr + 1) / (2 * N_vd)))


def _objective_key(N_vd, N_hd, N_vs, N_hs):
    return (N_vd * N_hd + N_vs * N_hs - 1, N_vd * N_hd, N_vd)


def solve_rf_allocation(
    M_vr: int,
    M_hr: int,
    smoothing: bool = True,
    enforce_c4: bool = False,
    fit_ports: bool = False,
) -> NestedDesign:
    """Fewest RF chains meeting the coarray-size constraints, by exhaustive search.

    ``N_vd`` runs over ``2..M_vr`` and ``N_hd`` over the odd values ``3..M_hr``;
    for each pair the sparse counts are the smallest meeting the vertical and
    horizontal coverage constraints. Ties go to the smaller dense block, then
    the smaller ``N_vd``.

    Args:
        M_vr: Vertical port count.
        M_hr: Horizontal port count (odd).
        smoothing: Use the vertical constraint ``N_vd N_vs >= M_vr`` that keeps
            the aperture after spatial smoothing; otherwise ``2 N_vd N_vs - 1 >= M_vr``.
        enforce_c4: Also require ``N_vd`` to be a multiple of ``N_hd``.
        fit_ports: Also require the layout's vertical span ``N_vd N_vs`` to fit
            in the ``M_vr`` physical rows.
    """
    if M_vr < 2:
        raise ValueError(f"M_vr must be at least 2, got {M_vr}")
    if M_hr < 3 or M_hr % 2 == 0:
        raise ValueError(f"M_hr must be odd and at least 3, got {M_hr}")
    best = None
    for N_vd in range(2, M_vr + 1):
        N_vs = _min_vs(N_vd, M_vr, smoothing)
        if fit_ports and N_vd * N_vs > M_vr:
            continue
        for N_hd in range(3, M_hr + 1, 2):
            if enforce_c4 and N_vd % N_hd != 0:
                continue
            N_hs = math.ceil(M_hr / N_hd)
            key = _objective_key(N_vd, N_hd, N_vs, N_hs)
            if best is None or key < best[0]:
                best = (key, (N_vd, N_hd, N_vs, N_hs))
    if best is None:
        raise ValueError("no feasible allocation for these port counts")
    N_vd, N_hd, N_vs, N_hs = best[1]
    return NestedDesign(N_vd, N_hd, N_vs, N_hs, M_vr, M_hr, smoothing)


def sparse_h_offset(design: NestedDesign) -> int:
    """Horizontal mode of the first sparse column.

    The nominal comb ``N_hd (n - N_hs/2 - 1/2)`` is centred on mode 0. For even
    ``N_hs`` it falls on half-integers; it is then moved down half a mode so
    every sparse port is a real phase mode. The comb then meets the dense
    block at its right edge, mode ``(N_hd-1)/2``.
    """
    twice = design.N_hd * (1 - design.N_hs)  # nominal first column, doubled
    return twice // 2  # floor: exact for odd N_hs, half a mode down otherwise


def nominal_sparse_h_x2(design: NestedDesign) -> np.ndarray:
    """Nominal sparse horizontal coordinates on the doubled lattice."""
    n = np.arange(1, design.N_hs + 1)
    return design.N_hd * (2 * n - design.N_hs - 1)


def element_locations(design: NestedDesign) -> tuple[np.ndarray, np.ndarray]:
    """``(dense, sparse)`` coordinate arrays, each row an ``(m_v, m_h)`` pair.

    Rows are ordered with ``m_v`` slow and ``m_h`` fast.
    """
    a = (design.N_hd - 1) // 2
    dense = np.array(
        [(-design.N_vd + nv, -a + nh - 1)
         for nv, nh in product(range(1, design.N_vd + 1), range(1, design.N_hd + 1))]
    )
    c = sparse_h_offset(design)
    sparse = np.array(
        [(design.N_vd * (nv - 1), c + design.N_hd * (nh - 1))
         for nv, nh in product(range(1, design.N_vs + 1), range(1, design.N_hs + 1))]
    )
    return dense, sparse


def rf_chain_locations(design: NestedDesign) -> tuple[np.ndarray, np.ndarray]:
    """Coordinates of every RF chain and its subarray tag.

    Sparse elements come first, then dense ones; the shared port is kept once,
    in the sparse group. Tags are ``'S'`` or ``'D'``.
    """
    dense, sparse = element_locations(design)
    seen = {tuple(p) for p in sparse}
    dense_only = [p for p in dense if tuple(p) not in seen]
    locs = np.vstack([sparse, np.array(dense_only).reshape(-1, 2)])
    tags = np.array(["S"] * len(sparse) + ["D"] * len(dense_only))
    return locs, tags


def port_index(design: NestedDesign, locations: np.ndarray) -> np.ndarray:
    """Flattened port index (vertical slow, horizontal fast) of each location."""
    locations = np.atleast_2d(locations)
    row = locations[:, 0] + design.N_vd - 1
    col = locations[:, 1] + design.P
    bad = (row < 0) | (row >= design.M_vr) | (col < 0) | (col >= design.M_hr)
    if np.any(bad):
        where = [tuple(map(int, p)) for p in locations[bad]]
        raise ValueError(
            f"locations {where[:4]} fall outside the {design.M_vr}x{design.M_hr} port grid"
        )
    return row * design.M_hr + col


def build_Brfc(design: NestedDesign) -> np.ndarray:
    """``(M_vr M_hr) x M_rf`` 0/1 matrix connecting ports to RF chains."""
    locs, _ = rf_chain_locations(design)
    idx = port_index(design, locs)
    B = np.zeros((design.M_vr * design.M_hr, len(locs)))
    B[idx, np.arange(len(locs))] = 1.0
    return B


def dof(design: NestedDesign) -> tuple[int, int, int]:
    """``(N_vdc, N_hdc, capacity)`` with capacity ``(N_vdc - 1)(N_hdc - 1)``."""
    return design.N_vdc, design.N_hdc, (design.N_vdc - 1) * (design.N_hdc - 1)


def brute_force_coarray(locations, wrap_h: int | None = None) -> set[tuple[int, ...]]:
    """All pairwise differences of a set of integer coordinates.

    With ``wrap_h`` the last coordinate is reduced modulo ``wrap_h`` into the
    symmetric range around zero.
    """
    pts = np.atleast_2d(np.asarray(locations, dtype=int))
    if pts.size == 0:
        raise ValueError("empty location set")
    diff = (pts[:, None, :] - pts[None, :, :]).reshape(-1, pts.shape[1])
    if wrap_h is not None:
        half = wrap_h // 2
        diff[:, -1] = np.mod(diff[:, -1] + half, wrap_h) - half
    return {tuple(int(v) for v in d) for d in np.unique(diff, axis=0)}


def coarray_holes(design: NestedDesign, wrap_h: int | None = None) -> list[tuple[int, int]]:
    """Declared lags missing from the brute-force difference set."""
    dense, sparse = element_locations(design)
    lags = brute_force_coarray(np.vstack([dense, sparse]), wrap_h)
    return [
        (int(v), int(h))
        for v in design.coarray_vertical_lags
        for h in design.coarray_horizontal_lags
        if (v, h) not in lags
    ]


def format_grid(design: NestedDesign) -> str:
    """Text picture of the port grid: ``D`` dense, ``S`` sparse, ``.`` unused.

    The top line is the highest vertical row; the shared port prints as ``D``.
    """
    dense, sparse = element_locations(design)
    grid = np.full((design.M_vr, design.M_hr), ".")
    for p in sparse:
        r, c = p[0] + design.N_vd - 1, p[1] + design.P
        if 0 <= r < design.M_vr and 0 <= c < design.M_hr:
            grid[r, c] = "S"
    for p in dense:
        grid[p[0] + design.N_vd - 1, p[1] + design.P] = "D"
    return "\n".join("".join(row) for row in grid[::-1])
