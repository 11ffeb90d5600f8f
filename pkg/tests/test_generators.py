import numpy as np
from hypothesis import given, strategies as st

from inexact_ipm.generators import planted_lp, random_kkt, random_sparse, random_sym_indefinite


@given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.integers(0, 8))
def test_planted_pair_is_optimal(seed, m, extra):
    rng = np.random.default_rng(seed)
    lp, (x, y, z) = planted_lp(m, m + extra, rng)
    A = lp.A.to_dense()
    assert np.linalg.matrix_rank(A) == m
    np.testing.assert_allclose(A @ x, lp.b, atol=1e-12)
    np.testing.assert_allclose(A.T @ y + z, lp.c, atol=1e-12)
    assert np.all(x >= 0) and np.all(z >= 0) and x @ z == 0.0


def test_random_sparse_no_empty_rows(rng):
    A = random_sparse(20, 5, 0.01, rng).to_dense()
    assert np.all(np.any(A != 0, axis=1))


def test_random_kkt_shape(rng):
    sys, lp, it = random_kkt(4, 9, rng)
    assert sys.K.order == 13 and sys.m == 4 and it.is_interior()


def test_random_sym_indefinite(rng):
    M = random_sym_indefinite(30, rng, density=0.2)
    np.testing.assert_array_equal(M, M.T)
    eig = np.linalg.eigvalsh(M)
    assert eig.min() < 0 < eig.max() and np.linalg.cond(M) < 1e10
