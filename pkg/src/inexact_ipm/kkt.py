"""Residuals, the augmented KKT matrix and elimination of ``d_z``.

For an iterate ``(x, y, z)`` and target ``mu`` the Newton equations are::

    A d_x            = -r_p
    A^T d_y + d_z    = -r_d
    Z d_x + X d_z    = -r_c

Eliminating ``d_z`` leaves the symmetric indefinite system::

    [ 0    A     ] [ d_y  ]   [ r_p                 ]
    [ A^T  X^-1 Z] [ -d_x ] = [ -r_d + X^-1 r_c     ]

whose (2,2) block is positive diagonal.  Unknowns are ordered ``d_y`` first
(positions ``0..m-1``) and the x-block after it.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .errors import StateError, StructuralError
from .sparse import SparseColMatrix, SymLowerMatrix, from_triplets, spmv, spmv_transpose, sym_spmv

__all__ = [
    "Iterate",
    "Residuals",
    "KktSystem",
    "Directions",
    "compute_residuals",
    "duality_mu",
    "assemble_kkt",
    "assemble_rhs",
    "recover_directions",
    "inexactness_ratio",
]


@dataclasses.dataclass(frozen=True, eq=False)
class Iterate:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    mu: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "z"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        if self.x.shape != self.z.shape:
            raise StructuralError("x and z must have the same length")

    def is_interior(self) -> bool:
        return bool(np.all(self.x > 0) and np.all(self.z > 0))

    @property
    def gap(self) -> float:
        return float(self.x @ self.z)


@dataclasses.dataclass(frozen=True, eq=False)
class Residuals:
    r_p: np.ndarray
    r_d: np.ndarray
    r_c: np.ndarray

    @property
    def norms(self):
        return (float(np.linalg.norm(self.r_p)), float(np.linalg.norm(self.r_d)),
                float(np.linalg.norm(self.r_c)))


@dataclasses.dataclass(frozen=True, eq=False)
class KktSystem:
    K: SymLowerMatrix
    m: int
    n: int
    delta_p: float = 0.0
    delta_d: float = 0.0


@dataclasses.dataclass(frozen=True, eq=False)
class Directions:
    d_y: np.ndarray
    d_x: np.ndarray
    d_z: np.ndarray


def _check_dims(lp_A: SparseColMatrix, it: Iterate):
    m, n = lp_A.shape
    if it.x.shape != (n,) or it.z.shape != (n,) or it.y.shape != (m,):
        raise StructuralError(
            f"iterate shapes x{it.x.shape} y{it.y.shape} z{it.z.shape} do not match A {m}x{n}")


def compute_residuals(lp, it: Iterate) -> Residuals:
    """``r_p = Ax - b``, ``r_d = A^T y + z - c``, ``r_c = x*z - mu``."""
    _check_dims(lp.A, it)
    r_p = spmv(lp.A, it.x) - lp.b
    r_d = spmv_transpose(lp.A, it.y) + it.z - lp.c
    r_c = it.x * it.z - it.mu
    return Residuals(r_p, r_d, r_c)


def duality_mu(it: Iterate, sigma: float) -> float:
    """Centering target ``sigma * x^T z / n`` (zero for an empty problem)."""
    n = it.x.size
    return sigma * it.gap / n if n else 0.0


def assemble_kkt(A: SparseColMatrix, it: Iterate, delta_p: float = 0.0,
                 delta_d: float = 0.0) -> KktSystem:
    """Lower triangle of ``[[-delta_p I, A], [A^T, X^-1 Z + delta_d I]]``."""
    _check_dims(A, it)
    if np.any(it.x <= 0) or np.any(it.z <= 0):
        raise StateError("assemble_kkt requires strictly positive x and z")
    if delta_p < 0 or delta_d < 0:
        raise ValueError("regularization must be nonnegative")
    m, n = A.shape
    rows = [m + A.colidx, m + np.arange(n)]
    cols = [A.rowind, m + np.arange(n)]
    vals = [A.values, it.z / it.x + delta_d]
    if delta_p > 0:
        rows.append(np.arange(m))
        cols.append(np.arange(m))
        vals.append(np.full(m, -delta_p))
    K = from_triplets(nrows=m + n, ncols=m + n, rows=np.concatenate(rows),
                      cols=np.concatenate(cols), values=np.concatenate(vals))
    return KktSystem(SymLowerMatrix(m + n, K), m, n, delta_p, delta_d)


def assemble_rhs(res: Residuals, it: Iterate) -> np.ndarray:
    """Right-hand side of the reduced system for unknowns ``(d_y, -d_x)``."""
    n = it.x.size
    if res.r_d.shape != (n,) or res.r_c.shape != (n,):
        raise StructuralError("residual and iterate dimensions differ")
    return np.concatenate([res.r_p, -res.r_d + res.r_c / it.x])


def recover_directions(d_y, d_xblock, it: Iterate, res: Residuals) -> Directions:
    """Undo the sign flip on the x-block and back-substitute for ``d_z``.

    The third Newton row ``Z d_x + X d_z = -r_c`` holds by construction,
    however inexact ``d_xblock`` is.
    """
    d_y = np.asarray(d_y, dtype=np.float64)
    d_xblock = np.asarray(d_xblock, dtype=np.float64)
    if d_xblock.shape != it.x.shape or res.r_c.shape != it.x.shape or d_y.shape != it.y.shape:
        raise StructuralError("direction and iterate dimensions differ")
    d_x = -d_xblock
    d_z = -(res.r_c + it.z * d_x) / it.x
    return Directions(d_y, d_x, d_z)


def inexactness_ratio(sys: KktSystem, rhs, d) -> float:
    """Relative residual ``||rhs - K d|| / ||rhs||`` of an approximate KKT solution."""
    rhs = np.asarray(rhs, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    if rhs.shape != (sys.K.order,):
        raise StructuralError("rhs length does not match the KKT order")
    rnorm = np.linalg.norm(rhs)
    if rnorm == 0.0:
        return 0.0 if not np.any(d) else np.inf
    return float(np.linalg.norm(rhs - sym_spmv(sys.K, d)) / rnorm)
