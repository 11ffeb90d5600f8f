"""Random test instances: LPs with a planted optimum and KKT-shaped matrices."""

import numpy as np

from .kkt import Iterate, assemble_kkt
from .mps import StandardFormLP
from .sparse import from_triplets

__all__ = ["random_sparse", "planted_lp", "random_kkt", "random_sym_indefinite"]


def random_sparse(m, n, density, rng):
    """Random ``m x n`` CSC matrix with no empty rows (normal entries)."""
    mask = rng.random((m, n)) < density
    for i in np.flatnonzero(~mask.any(axis=1)):
        mask[i, rng.integers(n)] = True
    r, c = np.nonzero(mask)
    return from_triplets(nrows=m, ncols=n, rows=r, cols=c, values=rng.standard_normal(r.size))


def planted_lp(m, n, rng, density=0.3):
    """Feasible LP with a known primal-dual optimal pair.

    ``A`` has full row rank, ``x*`` is positive on a random support of size
    ``m`` whose columns form a nonsingular basis, ``z*`` is positive off the
    support, and ``b = A x*``, ``c = A^T y* + z*``.
    Returns ``(lp, (x*, y*, z*))``.
    """
    if n < m:
        raise ValueError("need n >= m")
    while True:
        A = random_sparse(m, n, density, rng)
        dense = A.to_dense()
        support = np.sort(rng.choice(n, size=m, replace=False))
        if m == 0 or np.linalg.matrix_rank(dense[:, support]) == m:
            break
    x = np.zeros(n)
    x[support] = rng.uniform(0.5, 2.0, size=m)
    z = rng.uniform(0.5, 2.0, size=n)
    z[support] = 0.0
    y = rng.standard_normal(m)
    b = dense @ x
    c = dense.T @ y + z
    return StandardFormLP(A, b, c), (x, y, z)


def random_kkt(m, n, rng, density=0.3, spread=2.0):
    """KKT matrix of a random LP at a random interior point.

    ``spread`` controls the range of ``z/x`` (``10**[-spread, spread]``).
    """
    lp, _ = planted_lp(m, n, rng, density)
    x = 10.0 ** rng.uniform(-spread / 2, spread / 2, size=n)
    z = 10.0 ** rng.uniform(-spread / 2, spread / 2, size=n)
    it = Iterate(x, np.zeros(m), z)
    return assemble_kkt(lp.A, it), lp, it


def random_sym_indefinite(n, rng, density=0.1):
    """Sparse symmetric indefinite matrix, nonsingular by rejection (dense array)."""
    while True:
        M = rng.standard_normal((n, n)) * (rng.random((n, n)) < density)
        M = np.tril(M, -1)
        M = M + M.T
        d = rng.standard_normal(n)
        d[rng.random(n) < 0.4] = 0.0
        M[np.diag_indices(n)] = d
        if np.linalg.cond(M) < 1e10:
            return M
