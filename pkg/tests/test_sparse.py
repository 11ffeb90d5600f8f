import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from inexact_ipm.errors import StructuralError
from inexact_ipm.sparse import (SparseColMatrix, SymLowerMatrix, Triplets, from_triplets,
                                invert_permutation, read_matrix_market, spmv, spmv_transpose,
                                sym_from_dense, sym_permute, sym_spmv, write_matrix_market)


def dense_to_csc(M):
    r, c = np.nonzero(M)
    return from_triplets(nrows=M.shape[0], ncols=M.shape[1], rows=r, cols=c, values=M[r, c])


@st.composite
def sparse_dense(draw, max_dim=8):
    m = draw(st.integers(1, max_dim))
    n = draw(st.integers(1, max_dim))
    vals = draw(arrays(np.float64, (m, n), elements=st.floats(-10, 10, allow_subnormal=False)))
    mask = draw(arrays(np.bool_, (m, n)))
    return np.where(mask, vals, 0.0)


@st.composite
def sym_dense(draw, max_dim=8):
    n = draw(st.integers(1, max_dim))
    vals = draw(arrays(np.float64, (n, n), elements=st.floats(-10, 10, allow_subnormal=False)))
    mask = draw(arrays(np.bool_, (n, n)))
    M = np.tril(np.where(mask, vals, 0.0))
    return M + np.tril(M, -1).T


def test_duplicates_summed():
    A = from_triplets(Triplets(1, 1, [(0, 0, 1.0), (0, 0, 2.0)]))
    assert A.nnz == 1 and A.values[0] == 3.0


def test_empty():
    A = from_triplets(Triplets(2, 3, []))
    np.testing.assert_array_equal(A.colptr, [0, 0, 0, 0])


def test_direct_placement():
    A = from_triplets(Triplets(2, 2, [(1, 0, 5.0), (0, 1, 7.0)]))
    rows, vals = A.column(0)
    assert rows.tolist() == [1] and vals.tolist() == [5.0]
    rows, vals = A.column(1)
    assert rows.tolist() == [0] and vals.tolist() == [7.0]


def test_explicit_zero_kept():
    A = from_triplets(nrows=2, ncols=2, rows=[0, 1], cols=[0, 1], values=[0.0, 1.0])
    assert A.nnz == 2


def test_out_of_range():
    with pytest.raises(StructuralError):
        from_triplets(nrows=2, ncols=2, rows=[2], cols=[0], values=[1.0])


def test_invalid_structure_rejected():
    with pytest.raises(StructuralError):
        SparseColMatrix(2, 1, [0, 2], [1, 0], [1.0, 2.0])
    with pytest.raises(StructuralError):
        SymLowerMatrix(2, from_triplets(nrows=2, ncols=2, rows=[0], cols=[1], values=[1.0]))


def test_spmv_small():
    D = dense_to_csc(np.diag([1.0, 2.0]))
    np.testing.assert_array_equal(spmv(D, [3.0, 4.0]), [3.0, 8.0])
    np.testing.assert_array_equal(spmv_transpose(D, [3.0, 4.0]), [3.0, 8.0])
    Z = from_triplets(Triplets(2, 3, []))
    np.testing.assert_array_equal(spmv(Z, np.ones(3)), [0.0, 0.0])
    E = dense_to_csc(np.array([[0.0, 1.0], [0.0, 0.0]]))
    np.testing.assert_array_equal(spmv_transpose(E, [5.0, 0.0]), [0.0, 5.0])


def test_spmv_dense_reference(rng):
    M = rng.standard_normal((5, 4)) * (rng.random((5, 4)) < 0.5)
    A = dense_to_csc(M)
    x, y = rng.standard_normal(4), rng.standard_normal(5)
    np.testing.assert_allclose(spmv(A, x), M @ x, rtol=1e-14, atol=1e-14)
    np.testing.assert_allclose(spmv_transpose(A, y), M.T @ y, rtol=1e-14, atol=1e-14)


def test_spmv_length_mismatch():
    with pytest.raises(StructuralError):
        spmv(dense_to_csc(np.eye(2)), np.ones(3))


def test_sym_spmv_small():
    K = SymLowerMatrix(1, from_triplets(nrows=1, ncols=1, rows=[0], cols=[0], values=[2.0]))
    np.testing.assert_array_equal(sym_spmv(K, [3.0]), [6.0])
    K = SymLowerMatrix(2, from_triplets(nrows=2, ncols=2, rows=[1], cols=[0], values=[1.0]))
    np.testing.assert_array_equal(sym_spmv(K, [1.0, 0.0]), [0.0, 1.0])


def test_sym_spmv_dense_reference(rng):
    B = rng.standard_normal((6, 6))
    M = B + B.T
    v = rng.standard_normal(6)
    np.testing.assert_allclose(sym_spmv(sym_from_dense(M), v), M @ v, rtol=1e-14, atol=1e-13)


def test_sym_permute_examples(rng):
    K = sym_from_dense(np.diag([1.0, 2.0]))
    assert sym_permute(K, [0, 1]).storage.same_as(K.storage)
    np.testing.assert_array_equal(sym_permute(K, [1, 0]).diagonal(), [2.0, 1.0])
    B = rng.standard_normal((7, 7)) * (rng.random((7, 7)) < 0.5)
    M = B + B.T
    p = rng.permutation(7)
    P = np.zeros((7, 7))
    P[p, np.arange(7)] = 1.0
    np.testing.assert_array_equal(sym_permute(sym_from_dense(M), p).to_dense(), P @ M @ P.T)


def test_invalid_permutation():
    K = sym_from_dense(np.eye(3))
    with pytest.raises(StructuralError):
        sym_permute(K, [0, 0, 1])


@given(sparse_dense(), st.integers(0, 2**32 - 1))
def test_adjoint_identity(M, seed):
    r = np.random.default_rng(seed)
    A = dense_to_csc(M)
    v, w = r.standard_normal(M.shape[1]), r.standard_normal(M.shape[0])
    lhs, rhs = w @ spmv(A, v), v @ spmv_transpose(A, w)
    assert abs(lhs - rhs) <= 1e-13 * (np.abs(w) @ np.abs(M) @ np.abs(v) + 1e-300)


@given(sym_dense(), st.integers(0, 2**32 - 1))
def test_sym_spmv_matches_expanded(M, seed):
    v = np.random.default_rng(seed).standard_normal(M.shape[0])
    K = sym_from_dense(M)
    expanded = dense_to_csc(K.to_dense())
    np.testing.assert_allclose(sym_spmv(K, v), spmv(expanded, v), rtol=1e-12, atol=1e-12)


@given(sym_dense(), st.integers(0, 2**32 - 1))
def test_permute_inverse_roundtrip(M, seed):
    K = sym_from_dense(M, keep_zeros=True)
    p = np.random.default_rng(seed).permutation(K.order)
    back = sym_permute(sym_permute(K, p), invert_permutation(p))
    assert back.storage.same_as(K.storage)


@given(sparse_dense(), st.integers(0, 2**32 - 1))
def test_triplet_order_independent(M, seed):
    r, c = np.nonzero(M)
    # split every entry in two so duplicates are present
    rows, cols = np.r_[r, r], np.r_[c, c]
    vals = np.r_[M[r, c] * 0.25, M[r, c] * 0.75]
    A = from_triplets(nrows=M.shape[0], ncols=M.shape[1], rows=rows, cols=cols, values=vals)
    q = np.random.default_rng(seed).permutation(rows.size)
    B = from_triplets(nrows=M.shape[0], ncols=M.shape[1], rows=rows[q], cols=cols[q],
                      values=vals[q])
    assert A.same_as(B)


def test_matrix_market_roundtrip(tmp_path, rng):
    M = rng.standard_normal((4, 3)) * (rng.random((4, 3)) < 0.6)
    A = dense_to_csc(M)
    write_matrix_market(tmp_path / "a.mtx", A)
    assert read_matrix_market(tmp_path / "a.mtx").same_as(A)
    B = rng.standard_normal((5, 5))
    K = sym_from_dense(B + B.T)
    write_matrix_market(tmp_path / "k.mtx", K)
    K2 = read_matrix_market(tmp_path / "k.mtx")
    assert isinstance(K2, SymLowerMatrix) and K2.storage.same_as(K.storage)
