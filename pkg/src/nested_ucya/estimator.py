"""Elevation and azimuth estimation from the smoothed coarray tensor.

Elevations come from the shift invariance along the vertical lag (TLS-ESPRIT
on the tensor signal subspace). Each elevation then fixes the horizontal
steering amplitudes, leaving a 1-D MUSIC scan over azimuth against the
mode-2 noise subspace. :func:`matrix_baseline` does the same on the
flattened matrix instead of the tensor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .coarray import CoarrayModel
from .smoothing import SmoothedTensor
from .tensor import ComplexTensor, left_singular, multilinear_product, truncated_hosvd, unfold

GOLDEN = (math.sqrt(5) - 1) / 2


class EstimationError(RuntimeError):
    """The subspace problem is too ill-conditioned to give estimates."""


@dataclass(frozen=True)
class DoAEstimate:
    theta: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    grid: np.ndarray
    spectra: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def K(self) -> int:
        return self.theta.size


@dataclass(frozen=True)
class Subspaces:
    U1: np.ndarray
    U2: np.ndarray
    U3: np.ndarray
    core: ComplexTensor
    U2_noise: np.ndarray


def _as_tensor(Y) -> ComplexTensor:
    if isinstance(Y, SmoothedTensor):
        return Y.Y_ss
    return Y if isinstance(Y, ComplexTensor) else ComplexTensor(Y)


def signal_subspaces(Y_ss, K: int) -> Subspaces:
    """Rank-``K`` HOSVD factors and the mode-2 noise subspace."""
    Y = _as_tensor(Y_ss)
    if K < 1 or K > min(Y.shape):
        raise ValueError(f"K={K} must lie in 1..{min(Y.shape)} for a tensor of shape {Y.shape}")
    res = truncated_hosvd(Y, K)
    U2_full, _ = left_singular(unfold(Y, 2))
    if U2_full.shape[1] < Y.shape[1]:
        # thin factor from a tall SVD; complete the basis
        q, _ = np.linalg.qr(np.hstack([U2_full, np.eye(Y.shape[1])]))
        U2_full = q[:, : Y.shape[1]]
    noise = U2_full[:, K:]
    return Subspaces(res.factors[0], res.factors[1], res.factors[2], res.core, noise)


def _shift_pair(E: np.ndarray, N_ss: int, N_hdc: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows of ``E`` (vertical slow, horizontal fast) without the last / first vertical row."""
    K = E.shape[1]
    blocks = E.reshape(N_ss, N_hdc, K)
    return blocks[:-1].reshape(-1, K), blocks[1:].reshape(-1, K)


def tls_rotation(E1: np.ndarray, E2: np.ndarray) -> np.ndarray:
    """TLS solution ``Psi`` of ``E1 Psi ~ E2`` from the eigenvectors of ``W^H W``."""
    K = E1.shape[1]
    W = np.hstack([E1, E2])
    w, V = np.linalg.eigh(W.conj().T @ W)
    V = V[:, np.argsort(w)[::-1]]
    V12, V22 = V[:K, K:], V[K:, K:]
    if np.linalg.cond(V22) > 1e12:
        raise EstimationError("TLS block is singular; elevations cannot be separated")
    return -V12 @ np.linalg.inv(V22)


def psi_to_theta(psi, h: float = 0.5) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Elevation from the vertical rotation ``psi = exp(-j 2 pi h cos(theta))``.

    Returns ``(theta, clamped, imag_part)``.
    """
    psi = np.asarray(psi, dtype=complex)
    arg = 1j * np.log(psi) / (2 * np.pi * h)
    c = arg.real
    clamped = np.abs(c) > 1
    return np.arccos(np.clip(c, -1.0, 1.0)), clamped, arg.imag


def horizontal_signatures(E: np.ndarray, T: np.ndarray, N_ss: int, N_hdc: int) -> np.ndarray:
    """Unit-norm horizontal factor of each device, one row per eigenvector of ``Psi``.

    ``E T`` maps the signal basis onto the device steering vectors, so each
    column reshapes to a rank-1 ``N_ss x N_hdc`` block whose right factor is
    the horizontal steering vector up to scale.
    """
    blocks = (E @ T).reshape(N_ss, N_hdc, -1)
    sig = np.empty((T.shape[1], N_hdc), dtype=complex)
    for k in range(T.shape[1]):
        _, _, vh = np.linalg.svd(blocks[:, :, k], full_matrices=False)
        sig[k] = vh[0]
    return sig


def _elevations_from(E: np.ndarray, N_ss: int, N_hdc: int, h: float):
    E1, E2 = _shift_pair(E, N_ss, N_hdc)
    psi, T = np.linalg.eig(tls_rotation(E1, E2))
    order = np.argsort(np.angle(psi))[::-1]
    psi, T = psi[order], T[:, order]
    theta, clamped, imag = psi_to_theta(psi, h)
    diag = {"clamped": clamped, "imag_flag": np.abs(imag) > 0.1,
            "signatures": horizontal_signatures(E, T, N_ss, N_hdc)}
    return theta, psi, diag


def estimate_elevations(Y_ss, K: int, h: float = 0.5, subspaces: Subspaces | None = None):
    """Elevations (radians) by tensor TLS-ESPRIT, with ``psi`` and diagnostics."""
    Y = _as_tensor(Y_ss)
    N_ss, N_hdc, _ = Y.shape
    if K > N_ss - 1:
        raise ValueError(f"K={K} needs at least {K + 1} vertical rows, have {N_ss}")
    sub = subspaces or signal_subspaces(Y, K)
    Us = multilinear_product(sub.core, [sub.U1, sub.U2, None])
    return _elevations_from(unfold(Us, 3).T, N_ss, N_hdc, h)


def _golden_max(f, a: float, b: float, iters: int = 40) -> float:
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (a + b) / 2


def _local_peaks(spec: np.ndarray) -> np.ndarray:
    """Indices of circular local maxima, tallest first."""
    left, right = np.roll(spec, 1), np.roll(spec, -1)
    idx = np.flatnonzero((spec >= left) & (spec > right))
    return idx[np.argsort(spec[idx])[::-1]]


def _clusters(theta: np.ndarray, tol: float) -> list[list[int]]:
    """Group devices by elevation folded about the horizon.

    The horizontal amplitudes depend on ``sin(theta)`` only, so ``theta`` and
    ``pi - theta`` give the same azimuth spectrum.
    """
    folded = np.minimum(theta, np.pi - theta)
    order = np.argsort(folded)
    groups, cur = [], [int(order[0])]
    for a, b in zip(order[:-1], order[1:]):
        if folded[b] - folded[a] <= tol:
            cur.append(int(b))
        else:
            groups.append(cur)
            cur = [int(b)]
    groups.append(cur)
    return groups


def _assign_peaks(theta, spectra, cluster_tol, share_penalty, pairing=None):
    """Grid index of the azimuth peak for each device.

    Devices whose folded elevations lie within ``cluster_tol`` see nearly the
    same spectrum. Their candidate peaks are shared out to minimize the summed
    ``-log10`` spectrum, where a device reusing a peak already taken in its
    group pays ``share_penalty`` decades. Two devices therefore split onto
    separate peaks unless the second peak is that much weaker.

    ``pairing(k, idx)``, if given, returns a match weight in ``(0, 1]`` of
    device ``k`` against grid points ``idx``; its ``-log10`` joins the cost so
    near-identical spectra are told apart by the device's own signature.
    """
    K, n_grid = spectra.shape
    chosen = np.empty(K, dtype=int)
    for group in _clusters(np.asarray(theta), cluster_tol):
        if len(group) == 1:
            chosen[group[0]] = int(np.argmax(spectra[group[0]]))
            continue
        cands = []
        for k in group:
            for p in _local_peaks(spectra[k])[: len(group)]:
                if all(abs((p - q + n_grid // 2) % n_grid - n_grid // 2) > 1 for q in cands):
                    cands.append(int(p))
        base = -np.log10(spectra[np.ix_(group, cands)])
        if pairing is not None:
            base -= np.log10(np.array([pairing(k, np.array(cands)) for k in group]))
        slots = [base + (share_penalty if copy else 0.0) for copy in range(len(group))]
        rows, cols = linear_sum_assignment(np.hstack(slots))
        for r, c in zip(rows, cols):
            chosen[group[r]] = cands[c % len(cands)]
    return chosen


def _scan(pseudo, theta, grid, grid_step, cluster_tol, share_penalty, pairing=None):
    """Shared azimuth search: grid spectra, peak assignment, golden refinement."""
    spectra = np.array([pseudo(t, grid) for t in theta])
    peaks = _assign_peaks(theta, spectra, cluster_tol, share_penalty, pairing)
    phi = np.empty(len(theta))
    prominence = np.empty(len(theta))
    for k, (t, p) in enumerate(zip(theta, peaks)):
        f = lambda x, t=t: float(pseudo(t, np.array([x]))[0])
        phi[k] = np.mod(_golden_max(f, grid[p] - grid_step, grid[p] + grid_step), 2 * np.pi)
        prominence[k] = spectra[k, p] / np.median(spectra[k])
    return phi, spectra, {"prominence": prominence, "low_confidence": prominence < 3}


def _signature_pairing(signatures, theta, grid, model: CoarrayModel):
    def weight(k, idx):
        a = model.horizontal_steering(theta[k], grid[idx])
        w = np.abs(signatures[k].conj() @ a) ** 2 / np.sum(np.abs(a) ** 2, axis=0)
        return np.maximum(w, 1e-12)
    return weight


def _azimuth_grid(grid_step: float) -> np.ndarray:
    n = int(round(2 * np.pi / grid_step))
    return np.arange(n) * (2 * np.pi / n)


def estimate_azimuths(
    Y_ss,
    theta,
    K: int,
    model: CoarrayModel,
    grid_step: float = np.radians(0.1),
    subspaces: Subspaces | None = None,
    cluster_tol: float = np.radians(5.0),
    share_penalty: float = 2.5,
    signatures: np.ndarray | None = None,
):
    """Azimuths by a MUSIC scan per device. Returns ``(phi, spectra, grid, diagnostics)``.

    ``signatures`` (rows from :func:`horizontal_signatures`) break ties
    between devices of near-equal elevation.
    """
    Y = _as_tensor(Y_ss)
    if K >= Y.shape[1]:
        raise ValueError(f"K={K} leaves no mode-2 noise subspace ({Y.shape[1]} horizontal lags)")
    sub = subspaces or signal_subspaces(Y, K)
    Un = sub.U2_noise

    def pseudo(t, phis):
        a = model.horizontal_steering(t, phis)
        return 1.0 / np.maximum(np.sum(np.abs(Un.conj().T @ a) ** 2, axis=0), 1e-300)

    theta = np.asarray(theta)
    grid = _azimuth_grid(grid_step)
    pairing = None if signatures is None else _signature_pairing(signatures, theta, grid, model)
    phi, spectra, diag = _scan(pseudo, theta, grid, grid_step, cluster_tol, share_penalty, pairing)
    return phi, spectra, grid, diag


def estimate_doas(
    Y_ss,
    K: int,
    model: CoarrayModel,
    grid_step: float = np.radians(0.1),
    cluster_tol: float = np.radians(5.0),
    share_penalty: float = 2.5,
) -> DoAEstimate:
    """Subspaces, then elevations, then one azimuth per elevation."""
    sub = signal_subspaces(Y_ss, K)
    theta, psi, d1 = estimate_elevations(Y_ss, K, model.cfg.h, sub)
    phi, spectra, grid, d2 = estimate_azimuths(
        Y_ss, theta, K, model, grid_step, sub, cluster_tol, share_penalty, d1["signatures"])
    return DoAEstimate(theta, phi, psi, grid, spectra, {**d1, **d2})


def matrix_baseline(
    Y_ss,
    K: int,
    model: CoarrayModel,
    grid_step: float = np.radians(0.1),
    cluster_tol: float = np.radians(5.0),
    share_penalty: float = 2.5,
) -> DoAEstimate:
    """ESPRIT and MUSIC on the ``(N_ss N_hdc) x T`` flattening of the tensor."""
    Y = _as_tensor(Y_ss)
    N_ss, N_hdc, T = Y.shape
    if K > N_ss - 1 or K >= N_ss * N_hdc or K > T:
        raise ValueError(f"K={K} too large for a tensor of shape {Y.shape}")
    Es, _ = left_singular(unfold(Y, 3).T, K)
    theta, psi, d1 = _elevations_from(Es, N_ss, N_hdc, model.cfg.h)
    E = Es.reshape(N_ss, N_hdc, K).conj()

    def pseudo(t, phis):
        av = model.vertical_steering(t)[:N_ss]
        ah = model.horizontal_steering(t, phis)
        G = np.einsum("i,ijk->jk", av, E)
        proj = np.sum(np.abs(G.T @ ah) ** 2, axis=0)
        total = np.sum(np.abs(av) ** 2) * np.sum(np.abs(ah) ** 2, axis=0)
        return 1.0 / np.maximum(total - proj, 1e-300 * total)

    grid = _azimuth_grid(grid_step)
    pairing = _signature_pairing(d1["signatures"], theta, grid, model)
    phi, spectra, d2 = _scan(pseudo, theta, grid, grid_step, cluster_tol, share_penalty, pairing)
    return DoAEstimate(theta, phi, psi, grid, spectra, {**d1, **d2})
