"""Dense complex tensors and the multilinear algebra used by the estimator.

Conventions
-----------
A tensor of shape ``(I_1, ..., I_N)`` is held as a numpy array. Its
linearization ``vec`` runs with the first index fastest (column-major).

The mode-n unfolding places the mode-n fibers in columns. Column order is
cyclic: after removing mode n the remaining indices are visited in the order
``n+1, ..., N, 1, ..., n-1`` with index ``n+1`` slowest and index ``n-1``
fastest. With this ordering the mode-n unfolding of
``C = A x_1 B_1 ... x_N B_N`` is::

    C_(n) = B_n A_(n) (B_{n+1} kron ... kron B_N kron B_1 kron ... kron B_{n-1})^T

Modes are 1-based in the public API, as in the algebra.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class ComplexTensor:
    """Immutable dense complex tensor."""

    __slots__ = ("_data",)

    def __init__(self, data):
        arr = np.array(data, dtype=complex)
        if arr.ndim == 0:
            raise ValueError("a tensor needs at least one mode")
        arr.setflags(write=False)
        self._data = arr

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def shape(self) -> tuple[int, ...]:
        return self._data.shape

    @property
    def order(self) -> int:
        return self._data.ndim

    @property
    def size(self) -> int:
        return self._data.size

    def vec(self) -> np.ndarray:
        """Linearization with the first index fastest."""
        return self._data.ravel(order="F")

    @classmethod
    def from_vec(cls, values, shape) -> "ComplexTensor":
        values = np.asarray(values, dtype=complex)
        if values.size != int(np.prod(shape)):
            raise ValueError(f"{values.size} values do not fill shape {tuple(shape)}")
        return cls(values.reshape(shape, order="F"))

    def norm(self) -> float:
        """Frobenius norm."""
        return float(np.linalg.norm(self._data.ravel()))

    def __getitem__(self, idx):
        return self._data[idx]

    def __array__(self, dtype=None, copy=None):
        return self._data if dtype is None else self._data.astype(dtype)

    def __repr__(self) -> str:
        return f"ComplexTensor(shape={self.shape})"

    def allclose(self, other, rtol=1e-10, atol=0.0) -> bool:
        other = other.data if isinstance(other, ComplexTensor) else np.asarray(other)
        return self.shape == other.shape and np.allclose(self._data, other, rtol=rtol, atol=atol)


def _as_tensor(t) -> ComplexTensor:
    return t if isinstance(t, ComplexTensor) else ComplexTensor(t)


def _check_mode(t: ComplexTensor, n: int) -> int:
    if not 1 <= n <= t.order:
        raise ValueError(f"mode {n} out of range for an order-{t.order} tensor")
    return n - 1


def _cyclic_axes(order: int, axis: int) -> list[int]:
    return [axis] + [(axis + k) % order for k in range(1, order)]


def unfold(t, n: int) -> np.ndarray:
    """Mode-n unfolding, an ``I_n x (prod I / I_n)`` matrix."""
    t = _as_tensor(t)
    axis = _check_mode(t, n)
    moved = np.transpose(t.data, _cyclic_axes(t.order, axis))
    return moved.reshape(t.shape[axis], -1)


def fold(matrix, n: int, shape: Sequence[int]) -> ComplexTensor:
    """Inverse of :func:`unfold` for a tensor of the given shape."""
    shape = tuple(int(s) for s in shape)
    order = len(shape)
    if not 1 <= n <= order:
        raise ValueError(f"mode {n} out of range for an order-{order} tensor")
    axis = n - 1
    axes = _cyclic_axes(order, axis)
    matrix = np.asarray(matrix, dtype=complex)
    moved_shape = tuple(shape[a] for a in axes)
    if matrix.size != int(np.prod(shape)) or matrix.shape[0] != shape[axis]:
        raise ValueError(f"matrix of shape {matrix.shape} cannot fold into {shape} at mode {n}")
    moved = matrix.reshape(moved_shape)
    return ComplexTensor(np.transpose(moved, np.argsort(axes)))


def mode_n_product(t, m, n: int) -> ComplexTensor:
    """``t x_n m`` for a ``J_n x I_n`` matrix ``m``."""
    t = _as_tensor(t)
    axis = _check_mode(t, n)
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    if m.shape[1] != t.shape[axis]:
        raise ValueError(
            f"matrix has {m.shape[1]} columns but mode {n} has length {t.shape[axis]}"
        )
    out = np.tensordot(m, t.data, axes=(1, axis))
    return ComplexTensor(np.moveaxis(out, 0, axis))


def multilinear_product(t, matrices: Sequence) -> ComplexTensor:
    """``t x_1 M_1 x_2 M_2 ... x_N M_N``. ``None`` entries skip a mode."""
    t = _as_tensor(t)
    if len(matrices) != t.order:
        raise ValueError(f"expected {t.order} factor matrices, got {len(matrices)}")
    out = t
    for n, m in enumerate(matrices, start=1):
        if m is not None:
            out = mode_n_product(out, m, n)
    return out


def outer_product(a, b) -> ComplexTensor:
    """Outer product; the result has the modes of ``a`` followed by those of ``b``."""
    a = np.asarray(a.data if isinstance(a, ComplexTensor) else a, dtype=complex)
    b = np.asarray(b.data if isinstance(b, ComplexTensor) else b, dtype=complex)
    return ComplexTensor(np.multiply.outer(a, b))


def concat_mode_n(a, b, n: int) -> ComplexTensor:
    """Concatenate ``b`` after ``a`` along mode n."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.order != b.order:
        raise ValueError("tensors of different order cannot be concatenated")
    axis = _check_mode(a, n)
    for k in range(a.order):
        if k != axis and a.shape[k] != b.shape[k]:
            raise ValueError(f"shapes {a.shape} and {b.shape} differ outside mode {n}")
    return ComplexTensor(np.concatenate([a.data, b.data], axis=axis))


def _fix_phase(u: np.ndarray) -> np.ndarray:
    """Make the first non-negligible entry of every column real and positive."""
    u = u.copy()
    for k in range(u.shape[1]):
        col = u[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12 * max(np.abs(col).max(), 1e-300))
        if nz.size:
            pivot = col[nz[0]]
            u[:, k] = col * (np.abs(pivot) / pivot)
    return u


def left_singular(matrix: np.ndarray, rank: int | None = None):
    """Left singular vectors (phase-normalized) and singular values, descending."""
    matrix = np.asarray(matrix, dtype=complex)
    rows, cols = matrix.shape
    if cols > 4 * rows:
        # Wide unfoldings: the Gram matrix is far smaller than the matrix itself.
        gram = matrix @ matrix.conj().T
        w, u = np.linalg.eigh(gram)
        order = np.argsort(w)[::-1]
        w, u = np.clip(w[order], 0.0, None), u[:, order]
        s = np.sqrt(w)
    else:
        u, s, _ = np.linalg.svd(matrix, full_matrices=False)
    if rank is not None:
        u, s = u[:, :rank], s[:rank]
    return _fix_phase(u), s


@dataclass(frozen=True)
class HosvdResult:
    core: ComplexTensor
    factors: tuple[np.ndarray, ...]
    singular_values: tuple[np.ndarray, ...]

    def reconstruct(self) -> ComplexTensor:
        return multilinear_product(self.core, self.factors)


def hosvd(t) -> HosvdResult:
    """Full HOSVD; each factor is the unitary left singular matrix of an unfolding."""
    t = _as_tensor(t)
    factors, svals = [], []
    for n in range(1, t.order + 1):
        mat = unfold(t, n)
        u, s, _ = np.linalg.svd(mat, full_matrices=True)
        factors.append(_fix_phase(u))
        svals.append(s)
    core = multilinear_product(t, [f.conj().T for f in factors])
    return HosvdResult(core, tuple(factors), tuple(svals))


def truncated_hosvd(t, rank) -> HosvdResult:
    """Keep the ``rank`` dominant singular directions in every mode.

    ``rank`` is an int, or a sequence with one rank per mode.
    """
    t = _as_tensor(t)
    ranks = [int(rank)] * t.order if np.isscalar(rank) else [int(r) for r in rank]
    if len(ranks) != t.order:
        raise ValueError(f"expected {t.order} ranks, got {len(ranks)}")
    for n, (r, size) in enumerate(zip(ranks, t.shape), start=1):
        if not 1 <= r <= size:
            raise ValueError(f"rank {r} exceeds mode-{n} length {size}")
    factors, svals = [], []
    for n, r in enumerate(ranks, start=1):
        u, s = left_singular(unfold(t, n), r)
        factors.append(u)
        svals.append(s)
    core = multilinear_product(t, [f.conj().T for f in factors])
    return HosvdResult(core, tuple(factors), tuple(svals))


def numeric_rank(matrix, rel_tol: float = 1e-8) -> int:
    """Count singular values above ``rel_tol`` times the largest one."""
    s = np.linalg.svd(np.asarray(matrix, dtype=complex), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))


def n_ranks(t, rel_tol: float = 1e-8) -> tuple[int, ...]:
    """Numeric rank of every unfolding."""
    t = _as_tensor(t)
    return tuple(numeric_rank(unfold(t, n), rel_tol) for n in range(1, t.order + 1))
