"""Compressed sparse column storage and the handful of kernels the solver needs.

Two containers are provided:

* :class:`SparseColMatrix` -- general rectangular CSC matrix.
* :class:`SymLowerMatrix` -- symmetric matrix stored as its lower triangle
  (diagonal included) in a square :class:`SparseColMatrix`.

Both are immutable once built.  Indices are 0-based.
"""

from __future__ import annotations

import dataclasses
from typing import Iterable, Sequence, Tuple, Union

import numpy as np
import scipy.io
import scipy.sparse as sps

from .errors import DataError, StructuralError

__all__ = [
    "Triplets",
    "SparseColMatrix",
    "SymLowerMatrix",
    "from_triplets",
    "spmv",
    "spmv_transpose",
    "sym_spmv",
    "sym_permute",
    "sym_from_dense",
    "invert_permutation",
    "read_matrix_market",
    "write_matrix_market",
]


@dataclasses.dataclass(frozen=True)
class Triplets:
    """Coordinate-format input: ``entries`` is a sequence of ``(row, col, value)``."""

    nrows: int
    ncols: int
    entries: Sequence[Tuple[int, int, float]] = ()


@dataclasses.dataclass(frozen=True, eq=False)
class SparseColMatrix:
    """Compressed sparse column matrix.

    Attributes
    ----------
    nrows, ncols : int
        Shape.
    colptr : ndarray of int, shape (ncols + 1,)
        Column ``j`` occupies ``rowind[colptr[j]:colptr[j + 1]]``.
    rowind : ndarray of int
        Row indices, strictly increasing inside each column.
    values : ndarray of float
        Stored values (explicit zeros allowed).
    """

    nrows: int
    ncols: int
    colptr: np.ndarray
    rowind: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        colptr = np.asarray(self.colptr, dtype=np.int64)
        rowind = np.asarray(self.rowind, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.float64)
        if self.nrows < 0 or self.ncols < 0:
            raise StructuralError("negative matrix dimension")
        if colptr.shape != (self.ncols + 1,) or colptr[0] != 0:
            raise StructuralError("colptr must have length ncols + 1 and start at 0")
        if np.any(np.diff(colptr) < 0):
            raise StructuralError("colptr must be non-decreasing")
        nnz = int(colptr[-1])
        if rowind.shape != (nnz,) or values.shape != (nnz,):
            raise StructuralError("rowind/values length must equal colptr[ncols]")
        if nnz and (rowind.min() < 0 or rowind.max() >= self.nrows):
            raise StructuralError("row index out of range")
        colidx = np.repeat(np.arange(self.ncols, dtype=np.int64), np.diff(colptr))
        if nnz > 1:
            same_col = colidx[1:] == colidx[:-1]
            if np.any(rowind[1:][same_col] <= rowind[:-1][same_col]):
                raise StructuralError("row indices must be strictly increasing within a column")
        for arr in (colptr, rowind, values, colidx):
            arr.setflags(write=False)
        object.__setattr__(self, "colptr", colptr)
        object.__setattr__(self, "rowind", rowind)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_colidx", colidx)

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @property
    def nnz(self) -> int:
        return int(self.colptr[-1])

    @property
    def colidx(self) -> np.ndarray:
        """Column index of every stored entry (expanded ``colptr``)."""
        return self._colidx

    def column(self, j):
        lo, hi = self.colptr[j], self.colptr[j + 1]
        return self.rowind[lo:hi], self.values[lo:hi]

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.nrows, self.ncols))
        out[self.rowind, self._colidx] = self.values
        return out

    def to_scipy(self) -> sps.csc_matrix:
        return sps.csc_matrix(
            (self.values.copy(), self.rowind.copy(), self.colptr.copy()),
            shape=self.shape,
        )

    def same_as(self, other: "SparseColMatrix") -> bool:
        """Exact equality of shape, pattern and stored values."""
        return (
            self.shape == other.shape
            and np.array_equal(self.colptr, other.colptr)
            and np.array_equal(self.rowind, other.rowind)
            and np.array_equal(self.values, other.values)
        )


@dataclasses.dataclass(frozen=True, eq=False)
class SymLowerMatrix:
    """Symmetric matrix represented by its lower triangle."""

    order: int
    storage: SparseColMatrix

    def __post_init__(self):
        s = self.storage
        if s.nrows != self.order or s.ncols != self.order:
            raise StructuralError("storage must be square of size order")
        if s.nnz and np.any(s.rowind < s.colidx):
            raise StructuralError("SymLowerMatrix storage holds an upper-triangular entry")

    @property
    def nnz(self) -> int:
        return self.storage.nnz

    def diagonal(self) -> np.ndarray:
        s = self.storage
        out = np.zeros(self.order)
        on_diag = s.rowind == s.colidx
        out[s.colidx[on_diag]] = s.values[on_diag]
        return out

    def to_dense(self) -> np.ndarray:
        low = self.storage.to_dense()
        return low + np.tril(low, -1).T

    def to_scipy(self) -> sps.csc_matrix:
        low = self.storage.to_scipy()
        strict = sps.tril(low, -1)
        return (low + strict.T).tocsc()

    def max_abs(self) -> float:
        v = self.storage.values
        return float(np.max(np.abs(v))) if v.size else 0.0


def _assemble(nrows, ncols, rows, cols, vals, *, sum_duplicates=True):
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    if rows.size:
        if rows.min() < 0 or rows.max() >= nrows or cols.min() < 0 or cols.max() >= ncols:
            raise StructuralError("triplet index out of range")
    if not np.all(np.isfinite(vals)):
        raise DataError("non-finite value in triplets")
    # Sorting on value as well makes duplicate summation independent of input order.
    order = np.lexsort((vals, rows, cols))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if rows.size:
        start = np.ones(rows.size, dtype=bool)
        start[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        if not sum_duplicates and not start.all():
            raise StructuralError("duplicate entry")
        heads = np.flatnonzero(start)
        vals = np.add.reduceat(vals, heads) if heads.size < vals.size else vals
        rows, cols = rows[heads], cols[heads]
    colptr = np.zeros(ncols + 1, dtype=np.int64)
    np.cumsum(np.bincount(cols, minlength=ncols), out=colptr[1:])
    return SparseColMatrix(nrows, ncols, colptr, rows, vals)


def from_triplets(t: Union[Triplets, None] = None, *, nrows=None, ncols=None,
                  rows=None, cols=None, values=None) -> SparseColMatrix:
    """Build a CSC matrix from coordinate data, summing duplicates.

    Either pass a :class:`Triplets` or the arrays ``rows``, ``cols``,
    ``values`` together with ``nrows`` and ``ncols``.  Explicit zeros are kept.
    """
    if t is not None:
        nrows, ncols = t.nrows, t.ncols
        if len(t.entries):
            rows, cols, values = (np.array(c) for c in zip(*t.entries))
        else:
            rows = cols = values = ()
    if nrows is None or ncols is None:
        raise StructuralError("matrix dimensions are required")
    return _assemble(nrows, ncols, rows, cols, values)


def _check_len(v, n, what):
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (n,):
        raise StructuralError(f"{what}: expected vector of length {n}, got shape {v.shape}")
    return v


def spmv(A: SparseColMatrix, x) -> np.ndarray:
    """Return ``A @ x``."""
    x = _check_len(x, A.ncols, "spmv")
    return np.bincount(A.rowind, weights=A.values * x[A.colidx], minlength=A.nrows)


def spmv_transpose(A: SparseColMatrix, y) -> np.ndarray:
    """Return ``A.T @ y``."""
    y = _check_len(y, A.nrows, "spmv_transpose")
    return np.bincount(A.colidx, weights=A.values * y[A.rowind], minlength=A.ncols)


def sym_spmv(K: SymLowerMatrix, v) -> np.ndarray:
    """Return ``K @ v`` for the symmetric expansion of the stored lower triangle."""
    s = K.storage
    v = _check_len(v, K.order, "sym_spmv")
    r, c, a = s.rowind, s.colidx, s.values
    off = r != c
    out = np.bincount(r, weights=a * v[c], minlength=K.order)
    out += np.bincount(c[off], weights=a[off] * v[r[off]], minlength=K.order)
    return out


def invert_permutation(p) -> np.ndarray:
    p = np.asarray(p, dtype=np.int64)
    inv = np.empty_like(p)
    inv[p] = np.arange(p.size, dtype=np.int64)
    return inv


def _check_perm(p, n):
    p = np.asarray(p)
    if p.shape != (n,) or not np.issubdtype(p.dtype, np.integer):
        raise StructuralError("permutation has wrong length or dtype")
    p = p.astype(np.int64)
    if n and (p.min() < 0 or p.max() >= n or np.unique(p).size != n):
        raise StructuralError("not a permutation")
    return p


def sym_permute(K: SymLowerMatrix, p) -> SymLowerMatrix:
    """Return ``P K P^T`` where old index ``i`` moves to position ``p[i]``."""
    p = _check_perm(p, K.order)
    s = K.storage
    pr, pc = p[s.rowind], p[s.colidx]
    rows, cols = np.maximum(pr, pc), np.minimum(pr, pc)
    return SymLowerMatrix(K.order, _assemble(K.order, K.order, rows, cols, s.values,
                                             sum_duplicates=False))


def sym_from_dense(M, *, keep_zeros=False) -> SymLowerMatrix:
    """Lower-triangle storage of a dense symmetric array (test convenience)."""
    M = np.asarray(M, dtype=np.float64)
    n = M.shape[0]
    r, c = np.tril_indices(n)
    v = M[r, c]
    if not keep_zeros:
        nz = v != 0
        r, c, v = r[nz], c[nz], v[nz]
    return SymLowerMatrix(n, _assemble(n, n, r, c, v))


def lower_from_scipy(M, *, symmetric_input=True) -> SymLowerMatrix:
    """Take the lower triangle of a square scipy sparse matrix."""
    coo = sps.tril(M).tocoo()
    n = M.shape[0]
    return SymLowerMatrix(n, _assemble(n, n, coo.row, coo.col, coo.data))


def read_matrix_market(path) -> Union[SparseColMatrix, SymLowerMatrix]:
    """Read a coordinate Matrix Market file.

    ``general`` files give a :class:`SparseColMatrix`, ``symmetric`` files a
    :class:`SymLowerMatrix`.
    """
    info = scipy.io.mminfo(path)
    M = scipy.io.mmread(path)
    if not sps.issparse(M):
        raise StructuralError("only coordinate Matrix Market files are supported")
    if info[5] == "symmetric":
        return lower_from_scipy(M)
    coo = M.tocoo()
    return _assemble(M.shape[0], M.shape[1], coo.row, coo.col, coo.data)


def write_matrix_market(path, M: Union[SparseColMatrix, SymLowerMatrix], comment=""):
    """Write ``M`` as a coordinate Matrix Market file (1-based indices)."""
    if isinstance(M, SymLowerMatrix):
        scipy.io.mmwrite(path, M.to_scipy(), comment=comment, field="real",
                         symmetry="symmetric")
    else:
        scipy.io.mmwrite(path, M.to_scipy(), comment=comment, field="real",
                         symmetry="general")
