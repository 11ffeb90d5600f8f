"""Multilevel incomplete LDL^T preconditioner for symmetric indefinite matrices.

Each level sweeps over the columns of its matrix in order and tries a 1x1
pivot, then a 2x2 pivot with the largest remaining off-diagonal partner.  A
pivot is accepted only if a running lower estimate of ``||L^{-1}||_inf``
stays below ``kappa``; otherwise the index is postponed.  Postponed indices
keep receiving the updates of accepted pivots and form the Schur complement
factored by the next level.  When the remaining matrix is small (or the level
budget is spent) it is factored densely.

Dropping in ``L`` (``tau_L``) and in the carried Schur complement
(``tau_S``) are relative to the column's largest magnitude and are
controlled independently.
"""

from __future__ import annotations

import dataclasses
import itertools
import os
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg

from .errors import FactorizationError
from .ordering import fill_reducing_order, minimum_degree
from .sparse import (SparseColMatrix, SymLowerMatrix, from_triplets, invert_permutation,
                     sym_permute, write_matrix_market)

__all__ = [
    "FactorParams",
    "InverseNormEstimator",
    "estimate_inv_norm_step",
    "LevelFactor",
    "DenseLDL",
    "MultilevelFactorization",
    "factor_level",
    "factor_multilevel",
    "apply_preconditioner",
    "fill_ratio",
    "expand_dense",
    "dump_factorization",
]

_TINY = 1e-14
_SIGN_PATTERNS = {s: np.array(list(itertools.product((1.0, -1.0), repeat=s))) for s in (1, 2)}


@dataclasses.dataclass(frozen=True)
class FactorParams:
    """Parameters of the multilevel factorization.

    ``ordering`` selects the fill-reducing order: ``"amd"`` (minimum degree,
    also applied to every carried Schur complement) or ``"natural"``.
    """

    kappa: float = 5.0
    tau_L: float = 1e-3
    tau_S: float = 1e-3
    max_levels: int = 20
    final_dense_threshold: int = 200
    ordering: str = "amd"

    def __post_init__(self):
        if not self.kappa > 1:
            raise ValueError(f"kappa must exceed 1, got {self.kappa}")
        if self.tau_L < 0 or self.tau_S < 0:
            raise ValueError("drop tolerances must be nonnegative")
        if self.max_levels < 1:
            raise ValueError("max_levels must be at least 1")
        if self.final_dense_threshold < 0:
            raise ValueError("final_dense_threshold must be nonnegative")
        if self.ordering not in ("amd", "natural"):
            raise ValueError(f"unknown ordering {self.ordering!r}")

    def tightened(self, factor=0.1) -> "FactorParams":
        return dataclasses.replace(self, tau_L=self.tau_L * factor, tau_S=self.tau_S * factor)


class InverseNormEstimator:
    """Lower estimate of ``||L^{-1}||_inf`` maintained while ``L`` grows by columns.

    Each probe follows the forward substitution ``L x = s`` for a sign vector
    ``s``; ``V[:, j]`` holds the partial sums ``-sum_l l_il x_l`` of the rows
    not yet eliminated, so row ``i`` ends with ``|x_i| = |V[i, j]| +- 1``.
    Probe 0 picks each sign greedily, looking at the pivot column, to make the
    largest resulting entry as big as possible.  The remaining probes use
    fixed pseudo-random signs; they catch growth the greedy path misses.
    Every probe gives ``||x||_inf <= ||L^{-1}||_inf``.
    """

    def __init__(self, n, kappa, probes=8, seed=0):
        self.kappa = float(kappa)
        self.V = np.zeros((n, probes))
        self.estimate = 1.0
        self._signs = np.random.default_rng(seed).choice([-1.0, 1.0], size=(n, probes))

    def _trial(self, pivots, rows, mults):
        if len(pivots) == 1:
            return self._trial_1x1(pivots[0], rows, mults[:, 0])
        piv = list(pivots)
        base = self.V[piv]
        X = base + self._signs[piv]
        # greedy probe: try every sign pattern for the pivot block
        cand = base[:, 0][None, :] + _SIGN_PATTERNS[len(piv)]
        peaks = np.abs(cand).max(axis=1)
        if rows.size:
            trial = self.V[rows, 0][:, None] - mults @ cand.T
            peaks = np.maximum(peaks, np.abs(trial).max(axis=0) + 1.0)
        X[:, 0] = cand[int(np.argmax(peaks))]
        new = self.V[rows] - mults @ X
        peak = float(np.abs(X).max())
        if new.size:
            peak = max(peak, float(np.abs(new).max()) + 1.0)
        return new, peak

    def _trial_1x1(self, k, rows, m):
        base = self.V[k]
        X = base + self._signs[k]
        b0 = base[0]
        if rows.size:
            col = self.V[rows, 0]
            up = max(abs(b0 + 1.0), np.abs(col - m * (b0 + 1.0)).max() + 1.0)
            down = max(abs(b0 - 1.0), np.abs(col - m * (b0 - 1.0)).max() + 1.0)
        else:
            up, down = abs(b0 + 1.0), abs(b0 - 1.0)
        # ties go to +1, as in the block search
        X[0] = b0 + 1.0 if up >= down else b0 - 1.0
        new = self.V[rows] - m[:, None] * X[None, :]
        peak = float(np.abs(X).max())
        if new.size:
            peak = max(peak, float(np.abs(new).max()) + 1.0)
        return new, peak

    def step(self, pivots, rows, mults, commit=True) -> bool:
        """Test (and on success apply) the elimination of ``pivots``.

        ``mults`` has one row per entry of ``rows`` and one column per pivot.
        """
        mults = np.asarray(mults, dtype=np.float64).reshape(len(rows), len(pivots))
        new, peak = self._trial(pivots, rows, mults)
        if not peak <= self.kappa:
            return False
        if commit:
            self.V[rows] = new
            self.estimate = max(self.estimate, peak)
        return True

    def commit(self, pivots, rows, mults):
        mults = np.asarray(mults, dtype=np.float64).reshape(len(rows), len(pivots))
        new, peak = self._trial(pivots, rows, mults)
        self.V[rows] = new
        self.estimate = max(self.estimate, peak)


def estimate_inv_norm_step(est: InverseNormEstimator, pivots, rows, mults):
    """Functional form of :meth:`InverseNormEstimator.step`: ``(accepted, est)``."""
    return est.step(pivots, rows, mults), est


@dataclasses.dataclass(frozen=True, eq=False)
class LevelFactor:
    """One level of the chain, in level-local order (accepted, then postponed).

    ``L`` is strictly lower triangular; its unit diagonal is implicit.
    ``local_perm[q]`` is the level-input index placed at local position ``q``.
    ``blocks`` lists the pivot blocks of ``D`` (1x1 or 2x2 arrays) in order.
    """

    order: int
    accepted_count: int
    L: SparseColMatrix
    blocks: Tuple[np.ndarray, ...]
    local_perm: np.ndarray
    schur: Optional[SymLowerMatrix] = None

    @property
    def postponed(self):
        return self.local_perm[self.accepted_count:]

    @property
    def d_nnz(self) -> int:
        return int(sum(np.count_nonzero(np.tril(b)) for b in self.blocks))

    def __post_init__(self):
        one_pos, one_inv, two_pos, two_inv = [], [], [], []
        q = 0
        for blk in self.blocks:
            if blk.shape[0] == 1:
                one_pos.append(q)
                one_inv.append(1.0 / blk[0, 0])
            else:
                two_pos.append(q)
                two_inv.append(np.linalg.inv(blk))
            q += blk.shape[0]
        object.__setattr__(self, "_one_pos", np.asarray(one_pos, dtype=np.int64))
        object.__setattr__(self, "_one_inv", np.asarray(one_inv, dtype=np.float64))
        object.__setattr__(self, "_two_pos", np.asarray(two_pos, dtype=np.int64))
        object.__setattr__(self, "_two_inv", np.asarray(two_inv, dtype=np.float64).reshape(-1, 2, 2))

    def d_solve(self, w):
        out = np.empty_like(w)
        out[self._one_pos] = w[self._one_pos] * self._one_inv
        if self._two_pos.size:
            p = self._two_pos
            pair = np.stack([w[p], w[p + 1]], axis=1)
            sol = np.einsum("kij,kj->ki", self._two_inv, pair)
            out[p], out[p + 1] = sol[:, 0], sol[:, 1]
        return out

    def d_dense(self):
        D = np.zeros((self.accepted_count, self.accepted_count))
        q = 0
        for blk in self.blocks:
            s = blk.shape[0]
            D[q:q + s, q:q + s] = blk
            q += s
        return D


class DenseLDL:
    """Dense symmetric indefinite factorization (LAPACK Bunch-Kaufman)."""

    def __init__(self, S, level=0):
        S = np.asarray(S, dtype=np.float64)
        self.order = S.shape[0]
        if self.order == 0:
            self.nnz = 0
            return
        lu, d, perm = scipy.linalg.ldl(S, lower=True)
        scale = float(np.max(np.abs(S)))
        if scale == 0.0:
            raise FactorizationError(f"final dense block (level {level}) is zero", level, 0)
        i = 0
        while i < self.order:
            if i + 1 < self.order and d[i + 1, i] != 0.0:
                blk = d[i:i + 2, i:i + 2]
                det = blk[0, 0] * blk[1, 1] - blk[1, 0] ** 2
                if abs(det) <= _TINY * max(abs(blk[0, 0] * blk[1, 1]), blk[1, 0] ** 2):
                    raise FactorizationError(
                        f"singular 2x2 pivot in final dense block at level {level}, index {i}",
                        level, i)
                i += 2
            else:
                if abs(d[i, i]) <= _TINY * scale:
                    raise FactorizationError(
                        f"singular pivot in final dense block at level {level}, index {i}",
                        level, i)
                i += 1
        self.perm = perm
        self.Lt = lu[perm]
        self.d = d
        self.dinv = np.linalg.inv(d)
        self.nnz = int(np.count_nonzero(np.tril(self.Lt, -1)) + np.count_nonzero(np.tril(d)))

    def solve(self, r):
        if self.order == 0:
            return np.zeros(0)
        w = scipy.linalg.solve_triangular(self.Lt, r[self.perm], lower=True, unit_diagonal=True)
        v = self.dinv @ w
        t = scipy.linalg.solve_triangular(self.Lt, v, lower=True, unit_diagonal=True, trans="T")
        u = np.empty_like(t)
        u[self.perm] = t
        return u

    def to_dense(self):
        if self.order == 0:
            return np.zeros((0, 0))
        inv = np.empty_like(self.perm)
        inv[self.perm] = np.arange(self.order)
        lu = self.Lt[inv]
        return lu @ self.d @ lu.T


@dataclasses.dataclass(frozen=True, eq=False)
class MultilevelFactorization:
    order: int
    global_perm: np.ndarray
    levels: Tuple[LevelFactor, ...]
    final_dense: DenseLDL

    @property
    def nnz_total(self) -> int:
        return int(sum(lev.L.nnz + lev.d_nnz for lev in self.levels) + self.final_dense.nnz)

    @property
    def final_order(self) -> int:
        return self.final_dense.order


# --------------------------------------------------------------------------
# one level


def _two_by_two_ok(E):
    det = E[0, 0] * E[1, 1] - E[1, 0] * E[0, 1]
    if E[1, 0] == 0.0 and det == 0.0:
        return False
    return abs(det) > 1e-12 * max(abs(E[0, 0] * E[1, 1]), E[1, 0] ** 2)


class _DictWork:
    """Active submatrix as symmetric dict-of-dicts (any order)."""

    def __init__(self, S: SymLowerMatrix):
        st = S.storage
        self.diag = S.diagonal()
        self.adj: List[dict] = [dict() for _ in range(S.order)]
        off = st.rowind != st.colidx
        for i, j, a in zip(st.rowind[off].tolist(), st.colidx[off].tolist(),
                           st.values[off].tolist()):
            self.adj[i][j] = a
            self.adj[j][i] = a

    def column(self, k):
        col = self.adj[k]
        rows = np.array(sorted(col), dtype=np.int64)
        return rows, np.array([col[i] for i in rows.tolist()], dtype=np.float64)

    def block(self, rows, cols):
        return np.array([[self.adj[c].get(r, 0.0) for c in cols] for r in rows.tolist()],
                        dtype=np.float64).reshape(len(rows), len(cols))

    def eliminate(self, pivots, rows, U):
        adj = self.adj
        for q in pivots:
            for i in adj[q]:
                for qq in pivots:
                    adj[i].pop(qq, None)
            adj[q] = {}
        U = U.tolist()
        rl = rows.tolist()
        for a, i in enumerate(rl):
            urow = U[a]
            self.diag[i] -= urow[a]
            ai = adj[i]
            get = ai.get
            for j, u in zip(rl, urow):
                ai[j] = get(j, 0.0) - u
            del ai[i]

    def offdiag(self, idx):
        pos = {g: t for t, g in enumerate(idx)}
        r, c, v = [], [], []
        for t, i in enumerate(idx):
            for j, a in self.adj[i].items():
                tj = pos[j]
                if tj < t:
                    r.append(t)
                    c.append(tj)
                    v.append(a)
        return (np.asarray(r, dtype=np.int64), np.asarray(c, dtype=np.int64),
                np.asarray(v, dtype=np.float64))


class _DenseWork:
    """Active submatrix held in a dense array; exact zeros count as absent."""

    def __init__(self, S: SymLowerMatrix):
        self.W = S.to_dense()
        self.active = np.ones(S.order, dtype=bool)

    @property
    def diag(self):
        return np.diagonal(self.W)

    def column(self, k):
        colk = self.W[:, k]
        mask = self.active & (colk != 0.0)
        mask[k] = False
        rows = np.flatnonzero(mask)
        return rows, colk[rows]

    def block(self, rows, cols):
        return self.W[np.ix_(rows, list(cols))]

    def eliminate(self, pivots, rows, U):
        self.active[list(pivots)] = False
        if rows.size:
            self.W[np.ix_(rows, rows)] -= U

    def offdiag(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        sub = np.tril(self.W[np.ix_(idx, idx)], -1)
        r, c = np.nonzero(sub)
        return r.astype(np.int64), c.astype(np.int64), sub[r, c]


_DENSE_WORK_MAX = 1500


def factor_level(S: SymLowerMatrix, params: FactorParams, *, keep_schur=False):
    """Factor one level; returns ``(LevelFactor, S_next)``.

    ``S_next`` is the Schur complement on the postponed indices, ordered as
    ``LevelFactor.postponed``.
    """
    n = S.order
    tiny = _TINY * S.max_abs()
    work = _DenseWork(S) if n <= _DENSE_WORK_MAX else _DictWork(S)

    state = np.zeros(n, dtype=np.int8)  # 0 pending, 1 accepted, 2 postponed
    est = InverseNormEstimator(n, params.kappa)
    accepted: List[int] = []
    blocks: List[np.ndarray] = []
    lcols: List[Tuple[int, np.ndarray, np.ndarray]] = []  # (pivot, rows, multipliers)
    postponed: List[int] = []

    for k in range(n):
        if state[k]:
            continue
        rows, vals = work.column(k)
        dk = work.diag[k]
        pivots = None
        if abs(dk) > tiny:
            mult = vals[:, None] / dk
            if est.step((k,), rows, mult, commit=False):
                pivots, E = (k,), np.array([[dk]])
        if pivots is None:
            pending = state[rows] == 0
            if np.any(pending & (vals != 0.0)):
                mags = np.where(pending, np.abs(vals), -1.0)
                p = int(rows[np.flatnonzero(mags == mags.max())[0]])
                akp = vals[np.searchsorted(rows, p)]
                E = np.array([[dk, akp], [akp, work.diag[p]]])
                if _two_by_two_ok(E):
                    rp_, _ = work.column(p)
                    rows = np.union1d(rows, rp_)
                    rows = rows[(rows != k) & (rows != p)]
                    mult = work.block(rows, (k, p)) @ np.linalg.inv(E)
                    if est.step((k, p), rows, mult, commit=False):
                        pivots = (k, p)
        if pivots is None:
            state[k] = 2
            postponed.append(k)
            continue

        # drop small multipliers, column by column
        if mult.size:
            colmax = np.max(np.abs(mult), axis=0)
            mult = np.where((np.abs(mult) < params.tau_L * colmax) | (mult == 0.0), 0.0, mult)
            live = np.any(mult != 0.0, axis=1)
            rows, mult = rows[live], mult[live]
        est.commit(pivots, rows, mult)

        for c, q in enumerate(pivots):
            state[q] = 1
            accepted.append(q)
            nzc = mult[:, c] != 0.0
            lcols.append((q, rows[nzc], mult[nzc, c]))
        blocks.append(E)
        work.eliminate(pivots, rows, mult @ E @ mult.T)

    # Schur complement on the postponed set
    npost = len(postponed)
    srows, scols, svals = work.offdiag(postponed)
    pdiag = work.diag[np.asarray(postponed, dtype=np.int64)] if npost else np.zeros(0)
    if svals.size:
        cmax = np.abs(pdiag).copy()
        np.maximum.at(cmax, srows, np.abs(svals))
        np.maximum.at(cmax, scols, np.abs(svals))
        keep = (svals != 0.0) & ~(np.abs(svals) < params.tau_S * cmax[scols])
        srows, scols, svals = srows[keep], scols[keep], svals[keep]

    if params.ordering == "amd" and npost > 1:
        q = minimum_degree(npost, srows, scols)
        postponed = [postponed[t] for t in q.tolist()]
        newpos = invert_permutation(q)
        srows, scols = newpos[srows], newpos[scols]
        lo, hi = np.minimum(srows, scols), np.maximum(srows, scols)
        srows, scols = hi, lo
        pdiag = pdiag[q]

    S_next = SymLowerMatrix(npost, from_triplets(
        nrows=npost, ncols=npost,
        rows=np.concatenate([srows, np.arange(npost)]),
        cols=np.concatenate([scols, np.arange(npost)]),
        values=np.concatenate([svals, pdiag])))

    local_perm = np.asarray(accepted + postponed, dtype=np.int64)
    pos = invert_permutation(local_perm) if n else local_perm
    lr, lc, lv = [], [], []
    for q, rws, vals in lcols:
        lr.append(pos[rws])
        lc.append(np.full(rws.size, pos[q], dtype=np.int64))
        lv.append(vals)
    L = from_triplets(nrows=n, ncols=n,
                      rows=np.concatenate(lr) if lr else [],
                      cols=np.concatenate(lc) if lc else [],
                      values=np.concatenate(lv) if lv else [])
    level = LevelFactor(n, len(accepted), L, tuple(blocks), local_perm,
                        S_next if keep_schur else None)
    return level, S_next


# --------------------------------------------------------------------------
# chain


def factor_multilevel(K: SymLowerMatrix, params: FactorParams = FactorParams(), *,
                      keep_schur=False) -> MultilevelFactorization:
    """Fill-reducing reorder, then levels until the remainder is small enough."""
    if params.ordering == "amd":
        order = fill_reducing_order(K)
    else:
        order = np.arange(K.order, dtype=np.int64)
    S = sym_permute(K, invert_permutation(order))
    levels: List[LevelFactor] = []
    while S.order > params.final_dense_threshold and len(levels) < params.max_levels:
        level, S_next = factor_level(S, params, keep_schur=keep_schur)
        levels.append(level)
        S = S_next
        if level.accepted_count == 0:
            break
    dense = DenseLDL(S.to_dense(), level=len(levels))
    return MultilevelFactorization(K.order, order, tuple(levels), dense)


def _apply_level(F, lev_idx, r):
    if lev_idx == len(F.levels):
        return F.final_dense.solve(r)
    lev = F.levels[lev_idx]
    w = r[lev.local_perm]
    L = lev.L
    nacc = lev.accepted_count
    cp, ri, vals = L.colptr, L.rowind, L.values
    for j in range(nacc):
        lo, hi = cp[j], cp[j + 1]
        if hi > lo:
            w[ri[lo:hi]] -= vals[lo:hi] * w[j]
    u = np.empty_like(w)
    u[:nacc] = lev.d_solve(w[:nacc])
    u[nacc:] = _apply_level(F, lev_idx + 1, w[nacc:])
    for j in range(nacc - 1, -1, -1):
        lo, hi = cp[j], cp[j + 1]
        if hi > lo:
            u[j] -= vals[lo:hi] @ u[ri[lo:hi]]
    out = np.empty_like(u)
    out[lev.local_perm] = u
    return out


def apply_preconditioner(F: MultilevelFactorization, r) -> np.ndarray:
    """Return ``M^{-1} r`` for the multilevel approximation ``M`` of ``K``."""
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (F.order,):
        raise ValueError(f"vector length {r.shape} does not match order {F.order}")
    u = _apply_level(F, 0, r[F.global_perm])
    out = np.empty_like(u)
    out[F.global_perm] = u
    return out


def fill_ratio(F: MultilevelFactorization, A: SparseColMatrix) -> float:
    """Stored factor entries (strict L plus D, all levels) divided by ``nnz(A)``."""
    if A.nnz == 0:
        raise ValueError("fill ratio undefined for a matrix without nonzeros")
    return F.nnz_total / A.nnz


def _expand_level(F, lev_idx):
    if lev_idx == len(F.levels):
        return F.final_dense.to_dense()
    lev = F.levels[lev_idx]
    n, nacc = lev.order, lev.accepted_count
    L = lev.L.to_dense() + np.eye(n)
    D = np.zeros((n, n))
    D[:nacc, :nacc] = lev.d_dense()
    D[nacc:, nacc:] = _expand_level(F, lev_idx + 1)
    M_local = L @ D @ L.T
    M = np.empty_like(M_local)
    idx = lev.local_perm
    M[np.ix_(idx, idx)] = M_local
    return M


def expand_dense(F: MultilevelFactorization) -> np.ndarray:
    """Dense matrix ``M`` represented by the factorization chain (tests only)."""
    M_perm = _expand_level(F, 0)
    M = np.empty_like(M_perm)
    g = F.global_perm
    M[np.ix_(g, g)] = M_perm
    return M


def _lower_csc(M, strict):
    r, c = np.nonzero(np.tril(M, -1 if strict else 0))
    return from_triplets(nrows=M.shape[0], ncols=M.shape[1], rows=r, cols=c, values=M[r, c])


def dump_factorization(F: MultilevelFactorization, directory, prefix=""):
    """Write every level's L, D and carried Schur complement as Matrix Market.

    The dense remainder is written as ``final_L`` (strict lower part, in its
    pivot order) and ``final_D``.  Counting stored entries over all ``*_L`` and
    ``*_D`` files reproduces ``F.nnz_total``.
    """
    os.makedirs(directory, exist_ok=True)
    for k, lev in enumerate(F.levels):
        base = os.path.join(directory, f"{prefix}level{k}")
        write_matrix_market(base + "_L.mtx", lev.L)
        D = lev.d_dense()
        write_matrix_market(base + "_D.mtx", SymLowerMatrix(D.shape[0], _lower_csc(D, False)))
        if lev.schur is not None:
            write_matrix_market(base + "_S.mtx", lev.schur)
    fd = F.final_dense
    if fd.order:
        base = os.path.join(directory, f"{prefix}final")
        write_matrix_market(base + "_L.mtx", _lower_csc(fd.Lt, True))
        write_matrix_market(base + "_D.mtx", SymLowerMatrix(fd.order, _lower_csc(fd.d, False)))
