import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from nested_ucya.tensor import (
    ComplexTensor,
    concat_mode_n,
    fold,
    hosvd,
    mode_n_product,
    multilinear_product,
    n_ranks,
    outer_product,
    truncated_hosvd,
    unfold,
)

from conftest import crandn

shapes = st.lists(st.integers(1, 4), min_size=2, max_size=4)


def _random_tensor(shape, seed=0):
    return ComplexTensor(crandn(np.random.default_rng(seed), *shape))


def _unfold_oracle(a, n):
    """Element loop: column index with mode n+1 slowest, cycling to n-1 fastest."""
    N = a.ndim
    rest = [(n + k) % N for k in range(1, N)]
    cols = int(np.prod([a.shape[m] for m in rest]))
    out = np.zeros((a.shape[n], cols), dtype=complex)
    for idx in itertools.product(*(range(s) for s in a.shape)):
        col = 0
        for m in rest:
            col = col * a.shape[m] + idx[m]
        out[idx[n], col] = a[idx]
    return out


class TestComplexTensor:
    def test_vec_is_first_index_fastest(self):
        t = ComplexTensor(np.arange(6).reshape(2, 3))
        assert_array_equal(t.vec(), [0, 3, 1, 4, 2, 5])

    def test_from_vec_round_trip(self):
        t = _random_tensor((2, 3, 4))
        assert ComplexTensor.from_vec(t.vec(), t.shape).allclose(t, rtol=0)

    def test_from_vec_rejects_wrong_size(self):
        with pytest.raises(ValueError, match="do not fill"):
            ComplexTensor.from_vec(np.zeros(5), (2, 3))

    def test_scalar_rejected(self):
        with pytest.raises(ValueError, match="at least one mode"):
            ComplexTensor(1.0)

    def test_data_is_read_only(self):
        t = ComplexTensor(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            t.data[0, 0] = 1


class TestUnfold:
    def test_matrix_mode_one_is_itself(self):
        m = crandn(np.random.default_rng(0), 3, 4)
        assert_array_equal(unfold(m, 1), m)

    def test_all_ones(self):
        assert_array_equal(unfold(np.ones((2, 3, 4)), 2), np.ones((3, 8)))

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_matches_element_loop(self, n):
        t = _random_tensor((3, 4, 5))
        assert_array_equal(unfold(t, n), _unfold_oracle(t.data, n - 1))

    def test_mode_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            unfold(np.ones((2, 2)), 3)

    def test_fold_rejects_bad_shape(self):
        with pytest.raises(ValueError, match="cannot fold"):
            fold(np.ones((3, 4)), 1, (2, 6))

    def test_mode_product_unfolding(self):
        rng = np.random.default_rng(1)
        t, B = _random_tensor((3, 4, 5), 2), crandn(rng, 6, 4)
        assert_allclose(unfold(mode_n_product(t, B, 2), 2), B @ unfold(t, 2), atol=1e-12)

    def test_kronecker_identity_2x2x2(self):
        rng = np.random.default_rng(2)
        A = _random_tensor((2, 2, 2), 3)
        B1, B2, B3 = (crandn(rng, 2, 2) for _ in range(3))
        C = multilinear_product(A, [B1, B2, B3])
        assert_allclose(unfold(C, 1), B1 @ unfold(A, 1) @ np.kron(B2, B3).T, atol=1e-12)
        assert_allclose(unfold(C, 2), B2 @ unfold(A, 2) @ np.kron(B3, B1).T, atol=1e-12)
        assert_allclose(unfold(C, 3), B3 @ unfold(A, 3) @ np.kron(B1, B2).T, atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(shapes, st.integers(0, 2**31 - 1))
    def test_fold_inverts_unfold(self, shape, seed):
        t = _random_tensor(shape, seed)
        for n in range(1, t.order + 1):
            assert fold(unfold(t, n), n, t.shape).allclose(t, rtol=0)

    @settings(max_examples=40, deadline=None)
    @given(shapes, st.integers(0, 2**31 - 1))
    def test_norm_preserved(self, shape, seed):
        t = _random_tensor(shape, seed)
        for n in range(1, t.order + 1):
            assert np.isclose(np.linalg.norm(unfold(t, n)), t.norm())


class TestModeProducts:
    def test_identity(self):
        t = _random_tensor((2, 3, 4))
        assert mode_n_product(t, np.eye(3), 2).allclose(t, rtol=0)

    def test_rank_one(self):
        rng = np.random.default_rng(3)
        a, b, c, M = crandn(rng, 3), crandn(rng, 4), crandn(rng, 2), crandn(rng, 5, 3)
        t = outer_product(outer_product(a, b), c)
        assert mode_n_product(t, M, 1).allclose(outer_product(outer_product(M @ a, b), c))

    def test_different_modes_commute(self):
        rng = np.random.default_rng(4)
        t, A, B = _random_tensor((3, 4, 2)), crandn(rng, 5, 3), crandn(rng, 2, 4)
        lhs = mode_n_product(mode_n_product(t, A, 1), B, 2)
        rhs = mode_n_product(mode_n_product(t, B, 2), A, 1)
        assert lhs.allclose(rhs)

    def test_size_mismatch(self):
        with pytest.raises(ValueError, match="columns but mode 2"):
            mode_n_product(np.ones((2, 3)), np.ones((2, 2)), 2)

    def test_multilinear_identity_factors(self):
        t = _random_tensor((2, 3, 4))
        assert multilinear_product(t, [np.eye(2), np.eye(3), np.eye(4)]).allclose(t, rtol=0)

    def test_superdiagonal_core(self):
        rng = np.random.default_rng(5)
        K = 3
        core = np.zeros((K, K, K))
        core[np.arange(K), np.arange(K), np.arange(K)] = 1
        A, B, C = crandn(rng, 4, K), crandn(rng, 5, K), crandn(rng, 2, K)
        got = multilinear_product(core, [A, B, C]).data
        want = np.zeros((4, 5, 2), dtype=complex)
        for i, j, l in itertools.product(range(4), range(5), range(2)):
            want[i, j, l] = sum(A[i, k] * B[j, k] * C[l, k] for k in range(K))
        assert_allclose(got, want, atol=1e-12)

    def test_wrong_factor_count(self):
        with pytest.raises(ValueError, match="expected 3 factor"):
            multilinear_product(np.ones((2, 2, 2)), [np.eye(2)])


class TestOuterAndConcat:
    def test_unit_vectors(self):
        assert_array_equal(outer_product([1, 0], [0, 1]).data, [[0, 1], [0, 0]])

    def test_norm_multiplies(self):
        rng = np.random.default_rng(6)
        a, b, c = crandn(rng, 3), crandn(rng, 4), crandn(rng, 5)
        t = outer_product(outer_product(a, b), c)
        assert np.isclose(t.norm(), np.linalg.norm(a) * np.linalg.norm(b) * np.linalg.norm(c))

    def test_order_of_modes(self):
        assert outer_product(np.ones((2, 3)), np.ones(4)).shape == (2, 3, 4)

    def test_column_stack(self):
        a, b = np.ones((2, 3)), 2 * np.ones((2, 1))
        assert_array_equal(concat_mode_n(a, b, 2).data, np.hstack([a, b]))

    def test_empty_mode_is_identity(self):
        a = _random_tensor((2, 3, 4))
        assert concat_mode_n(a, np.zeros((2, 0, 4)), 2).allclose(a, rtol=0)

    def test_unfolding_row_blocks(self):
        a, b = _random_tensor((2, 3, 4), 1), _random_tensor((5, 3, 4), 2)
        assert_array_equal(unfold(concat_mode_n(a, b, 1), 1), np.vstack([unfold(a, 1), unfold(b, 1)]))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="differ outside mode 1"):
            concat_mode_n(np.ones((2, 3)), np.ones((2, 4)), 1)


class TestHosvd:
    def test_rank_one_core(self):
        rng = np.random.default_rng(7)
        a, b, c = crandn(rng, 3), crandn(rng, 4), crandn(rng, 5)
        res = hosvd(outer_product(outer_product(a, b), c))
        mags = np.sort(np.abs(res.core.data.ravel()))[::-1]
        expected = np.linalg.norm(a) * np.linalg.norm(b) * np.linalg.norm(c)
        assert np.isclose(mags[0], expected)
        assert mags[1] <= 1e-10 * expected
        assert np.isclose(res.singular_values[0][0], expected)

    def test_reconstruction(self):
        t = _random_tensor((4, 5, 6))
        res = hosvd(t)
        assert np.linalg.norm(res.reconstruct().data - t.data) <= 1e-10 * t.norm()
        for f in res.factors:
            assert np.linalg.norm(f.conj().T @ f - np.eye(f.shape[1])) <= 1e-10

    def test_truncation_at_multilinear_rank_is_lossless(self):
        rng = np.random.default_rng(8)
        K = 3
        t = sum(outer_product(outer_product(crandn(rng, 6), crandn(rng, 7)), crandn(rng, 5)).data
                for _ in range(K))
        res = truncated_hosvd(t, K)
        assert [f.shape[1] for f in res.factors] == [K, K, K]
        assert np.linalg.norm(res.reconstruct().data - t) <= 1e-10 * np.linalg.norm(t)
        assert n_ranks(t) == (K, K, K)

    def test_singular_values_descending(self):
        res = hosvd(_random_tensor((3, 4, 5)))
        for s in res.singular_values:
            assert np.all(np.diff(s) <= 0) and np.all(s >= 0)

    def test_truncation_rank_too_large(self):
        with pytest.raises(ValueError, match="exceeds mode-1 length"):
            truncated_hosvd(np.ones((2, 3, 3)), 3)

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.integers(1, 4), min_size=3, max_size=3), st.integers(0, 2**31 - 1))
    def test_reconstruction_property(self, shape, seed):
        t = _random_tensor(shape, seed)
        assert np.linalg.norm(hosvd(t).reconstruct().data - t.data) <= 1e-10 * max(t.norm(), 1.0)
