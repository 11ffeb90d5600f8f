"""Dense reference computations used to check the sparse machinery.

Nothing here imports the factorization, Krylov or IPM modules; the point is to
have a second, unrelated route to the same numbers.  All routines are O(n^3)
or worse and meant for small problems only.
"""

import itertools

import numpy as np

__all__ = [
    "OracleError",
    "bunch_parlett",
    "dense_sym_solve",
    "conjugate_directions_solve",
    "lp_vertex_oracle",
    "dense_inv_norm",
    "symbolic_cholesky_nnz",
]

_ALPHA = (1.0 + np.sqrt(17.0)) / 8.0


class OracleError(RuntimeError):
    pass


def bunch_parlett(K):
    """Symmetric indefinite factorization with complete pivoting.

    Returns ``perm, L, D`` with ``K[perm][:, perm] == L @ D @ L.T`` where ``L``
    is unit lower triangular and ``D`` block diagonal with 1x1/2x2 blocks.
    """
    A = np.array(K, dtype=np.float64)
    n = A.shape[0]
    if n > 500:
        raise OracleError("dense oracle limited to order 500")
    perm = np.arange(n)
    L = np.eye(n)
    D = np.zeros((n, n))
    scale = np.max(np.abs(A)) if n else 0.0
    if scale == 0.0 and n:
        raise OracleError("zero matrix")

    def swap(i, j):
        if i == j:
            return
        A[[i, j], :] = A[[j, i], :]
        A[:, [i, j]] = A[:, [j, i]]
        L[[i, j], :k] = L[[j, i], :k]
        perm[[i, j]] = perm[[j, i]]

    k = 0
    while k < n:
        S = A[k:, k:]
        diag = np.abs(np.diag(S))
        r = int(np.argmax(diag))
        mu1 = diag[r]
        off = np.abs(S - np.diag(np.diag(S)))
        if off.size > 1 and off.max() > 0:
            p, q = np.unravel_index(int(np.argmax(off)), off.shape)
            mu0 = off[p, q]
        else:
            mu0 = 0.0
        if mu1 >= _ALPHA * mu0:
            if mu1 <= 1e-14 * scale:
                raise OracleError(f"singular matrix at step {k}")
            swap(k, k + r)
            d = A[k, k]
            l = A[k + 1:, k] / d
            A[k + 1:, k + 1:] -= np.outer(l, A[k + 1:, k])
            L[k + 1:, k] = l
            D[k, k] = d
            k += 1
        else:
            p, q = sorted((int(p), int(q)))
            swap(k, k + p)
            swap(k + 1, k + q)
            E = A[k:k + 2, k:k + 2].copy()
            if abs(np.linalg.det(E)) <= 1e-28 * scale * scale:
                raise OracleError(f"singular 2x2 block at step {k}")
            C = A[k + 2:, k:k + 2]
            W = np.linalg.solve(E, C.T).T
            A[k + 2:, k + 2:] -= W @ C.T
            L[k + 2:, k:k + 2] = W
            D[k:k + 2, k:k + 2] = E
            k += 2
    return perm, L, D


def dense_sym_solve(K, rhs):
    """Solve a dense symmetric (possibly indefinite) system via Bunch-Parlett."""
    K = np.asarray(K, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    perm, L, D = bunch_parlett(K)
    # Plain loops keep this independent of any LAPACK triangular solver.
    n = K.shape[0]
    w = rhs[perm].copy()
    for j in range(n):
        w[j + 1:] -= L[j + 1:, j] * w[j]
    u = np.empty(n)
    k = 0
    while k < n:
        if k + 1 < n and D[k + 1, k] != 0.0:
            u[k:k + 2] = np.linalg.solve(D[k:k + 2, k:k + 2], w[k:k + 2])
            k += 2
        else:
            u[k] = w[k] / D[k, k]
            k += 1
    for j in range(n - 1, -1, -1):
        u[j] -= L[j + 1:, j] @ u[j + 1:]
    out = np.empty(n)
    out[perm] = u
    return out


def conjugate_directions_solve(K, rhs):
    """Solve an SPD system with K-conjugated unit directions (Gram-Schmidt)."""
    K = np.asarray(K, dtype=np.float64)
    n = K.shape[0]
    dirs = []
    x = np.zeros(n)
    for i in range(n):
        p = np.zeros(n)
        p[i] = 1.0
        for q, Kq, qKq in dirs:
            p -= (Kq @ p) / qKq * q
        Kp = K @ p
        pKp = p @ Kp
        dirs.append((p, Kp, pKp))
        x += (p @ rhs) / pKp * p
    return x


def lp_vertex_oracle(A, b, c, *, feas_tol=1e-10):
    """Minimize c^T x over {Ax = b, x >= 0} by enumerating every basis.

    ``A`` is a dense ``m x n`` array with ``n <= 12`` and ``m <= 6``.  Returns
    ``(objective, x)``; raises :class:`OracleError` if no basis is feasible.
    Unboundedness is not detected.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    m, n = A.shape
    if n > 12 or m > 6:
        raise OracleError("vertex enumeration limited to n <= 12, m <= 6")
    best = None
    for basis in itertools.combinations(range(n), m):
        B = A[:, basis]
        if m and np.linalg.matrix_rank(B) < m:
            continue
        xb = np.linalg.solve(B, b) if m else np.zeros(0)
        if np.any(xb < -feas_tol):
            continue
        x = np.zeros(n)
        x[list(basis)] = np.maximum(xb, 0.0)
        obj = float(c @ x)
        if best is None or obj < best[0]:
            best = (obj, x)
    if best is None:
        raise OracleError("no feasible basis: LP infeasible")
    return best


def dense_inv_norm(L):
    """Exact infinity norm of the inverse of a unit lower triangular matrix."""
    L = np.asarray(L, dtype=np.float64)
    n = L.shape[0]
    if n > 500:
        raise OracleError("dense oracle limited to order 500")
    inv = np.linalg.inv(L)
    return float(np.max(np.sum(np.abs(inv), axis=1))) if n else 1.0


def symbolic_cholesky_nnz(pattern, order):
    """Strict-lower nonzeros of the exact factor of ``pattern`` eliminated in ``order``.

    ``pattern`` is a dense boolean/numeric symmetric array; ``order[k]`` is the
    index eliminated at step ``k``.  Uses explicit elimination graphs.
    """
    P = np.asarray(pattern) != 0
    n = P.shape[0]
    adj = [set(np.flatnonzero(P[i])) - {i} for i in range(n)]
    done = set()
    total = 0
    for v in order:
        nbrs = adj[v] - done
        total += len(nbrs)
        for u in nbrs:
            adj[u] |= nbrs - {u}
        done.add(v)
    return total
