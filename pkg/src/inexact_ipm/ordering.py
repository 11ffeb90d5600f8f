"""Fill-reducing symmetric ordering (minimum degree on the elimination graph)."""

import heapq

import numpy as np

from .sparse import SymLowerMatrix

__all__ = ["fill_reducing_order", "minimum_degree"]


_DENSE_GRAPH_MAX = 2000


def minimum_degree(n, rows, cols):
    """Greedy minimum-degree elimination order of a symmetric pattern.

    ``rows``/``cols`` list the off-diagonal pattern (either triangle or both).
    Ties are broken by the smaller initial degree, then the smaller index, so
    the result is deterministic.
    Returns ``order`` with ``order[k]`` = index eliminated at step ``k``.
    """
    if n <= _DENSE_GRAPH_MAX:
        return _minimum_degree_dense(n, rows, cols)
    return _minimum_degree_sets(n, rows, cols)


def _minimum_degree_dense(n, rows, cols):
    """Same rule on a boolean adjacency matrix (fast for small, filling graphs)."""
    adj = np.zeros((n, n), dtype=bool)
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    adj[rows, cols] = True
    adj[cols, rows] = True
    adj[np.diag_indices(n)] = False
    deg = adj.sum(axis=1)
    deg0 = deg.copy()
    alive = np.ones(n, dtype=bool)
    order = np.empty(n, dtype=np.int64)
    big = n + 1
    for k in range(n):
        key = np.where(alive, deg, big)
        cand = key == key.min()
        d0 = np.where(cand, deg0, big)
        v = int(np.argmax(d0 == d0.min()))
        order[k] = v
        alive[v] = False
        nbrs = np.flatnonzero(adj[v])
        adj[v, :] = False
        adj[:, v] = False
        if nbrs.size:
            adj[np.ix_(nbrs, nbrs)] = True
            adj[nbrs, nbrs] = False
            deg[nbrs] = adj[nbrs].sum(axis=1)
    return order


def _minimum_degree_sets(n, rows, cols):
    adj = [set() for _ in range(n)]
    for i, j in zip(rows, cols):
        if i != j:
            adj[i].add(j)
            adj[j].add(i)
    deg0 = [len(a) for a in adj]
    heap = [(deg0[i], deg0[i], i) for i in range(n)]
    heapq.heapify(heap)
    eliminated = np.zeros(n, dtype=bool)
    order = []
    while heap:
        deg, _, v = heapq.heappop(heap)
        if eliminated[v] or deg != len(adj[v]):
            continue
        eliminated[v] = True
        order.append(v)
        nbrs = adj[v]
        for u in nbrs:
            au = adj[u]
            au.discard(v)
            au.update(nbrs)
            au.discard(u)
            # stale heap entries are skipped on pop
            heapq.heappush(heap, (len(au), deg0[u], u))
        adj[v] = set()
    return np.asarray(order, dtype=np.int64)


def fill_reducing_order(K: SymLowerMatrix) -> np.ndarray:
    """Minimum-degree elimination order for the pattern of ``K``.

    ``order[k]`` is the original index placed at position ``k``; use
    ``invert_permutation(order)`` to obtain the position map expected by
    :func:`~inexact_ipm.sparse.sym_permute`.
    """
    s = K.storage
    return minimum_degree(K.order, s.rowind, s.colidx)
