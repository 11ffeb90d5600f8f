import numpy as np
import pytest

from inexact_ipm.oracles import (OracleError, bunch_parlett, conjugate_directions_solve,
                                 dense_inv_norm, dense_sym_solve, lp_vertex_oracle,
                                 symbolic_cholesky_nnz)
from inexact_ipm.generators import planted_lp, random_sym_indefinite


def test_dense_solve_identity():
    rhs = np.array([1.0, -2.0, 3.0])
    np.testing.assert_allclose(dense_sym_solve(np.eye(3), rhs), rhs)


def test_dense_solve_swap():
    np.testing.assert_allclose(dense_sym_solve([[0.0, 1.0], [1.0, 0.0]], [1.0, 0.0]), [0.0, 1.0])


def test_dense_solve_matches_conjugate_directions(rng):
    B = rng.standard_normal((30, 30))
    K = B @ B.T + 30 * np.eye(30)
    rhs = rng.standard_normal(30)
    x1 = dense_sym_solve(K, rhs)
    x2 = conjugate_directions_solve(K, rhs)
    assert np.linalg.norm(x1 - x2) <= 1e-10 * np.linalg.norm(x1)


def test_dense_solve_indefinite_residual(rng):
    K = random_sym_indefinite(60, rng, density=0.2)
    rhs = rng.standard_normal(60)
    x = dense_sym_solve(K, rhs)
    assert np.linalg.norm(K @ x - rhs) <= 1e-10 * np.linalg.norm(rhs) * np.linalg.cond(K) ** 0.5


def test_dense_solve_singular():
    with pytest.raises(OracleError):
        dense_sym_solve(np.zeros((2, 2)), [1.0, 1.0])


def test_bunch_parlett_reconstructs(rng):
    K = random_sym_indefinite(25, rng, density=0.3)
    perm, L, D = bunch_parlett(K)
    np.testing.assert_allclose(L @ D @ L.T, K[np.ix_(perm, perm)], atol=1e-11)
    np.testing.assert_array_equal(np.diag(L), 1.0)


def test_vertex_oracle_toy():
    obj, x = lp_vertex_oracle(np.array([[1.0, 1.0]]), np.array([1.0]), np.array([2.0, 1.0]))
    assert obj == pytest.approx(1.0)
    np.testing.assert_allclose(x, [0.0, 1.0])


def test_vertex_oracle_identity():
    obj, x = lp_vertex_oracle(np.eye(2), np.array([1.0, 2.0]), np.array([1.0, 1.0]))
    assert obj == pytest.approx(3.0)
    np.testing.assert_allclose(x, [1.0, 2.0])


def test_vertex_oracle_planted(rng):
    lp, (xs, ys, zs) = planted_lp(3, 8, rng)
    obj, _ = lp_vertex_oracle(lp.A.to_dense(), lp.b, lp.c)
    assert obj == pytest.approx(lp.c @ xs, rel=1e-10)


def test_vertex_oracle_infeasible():
    with pytest.raises(OracleError):
        lp_vertex_oracle(np.array([[1.0, 1.0]]), np.array([-1.0]), np.array([1.0, 1.0]))


def test_inv_norm_identity():
    assert dense_inv_norm(np.eye(5)) == 1.0


def test_inv_norm_bidiagonal():
    L = np.eye(4) + np.diag(np.full(3, 2.0), -1)
    assert dense_inv_norm(L) == pytest.approx(15.0)


def test_inv_norm_at_least_one(rng):
    for _ in range(10):
        L = np.tril(rng.standard_normal((6, 6)), -1) + np.eye(6)
        assert dense_inv_norm(L) >= 1.0


def test_symbolic_cholesky_arrowhead():
    n = 5
    pattern = np.eye(n, dtype=bool)
    pattern[0, :] = pattern[:, 0] = True
    # arrow vertex first fills everything, last fills nothing
    assert symbolic_cholesky_nnz(pattern, np.arange(n)) == n * (n - 1) // 2
    assert symbolic_cholesky_nnz(pattern, np.r_[1:n, 0]) == n - 1
