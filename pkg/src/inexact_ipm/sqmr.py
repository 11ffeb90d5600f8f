"""Simplified QMR for symmetric indefinite systems with a symmetric preconditioner.

Coupled two-term recurrences (Freund & Nachtigal) with the preconditioner
applied on the left; the Lanczos inner products are ``M^{-1}``-weighted, which
keeps the recurrence symmetric for indefinite ``K`` and ``M``.  Convergence
is only declared after the true residual ``||b - K x||`` has been recomputed.
A Lanczos breakdown (``r^T M^{-1} r = 0`` can happen for indefinite ``M``)
is met with a preconditioned Richardson step and a restart, a few times at most.
"""

from __future__ import annotations

import dataclasses
import enum
from typing import Callable, Optional, Union

import numpy as np

from .errors import StructuralError
from .ldl import MultilevelFactorization, apply_preconditioner
from .sparse import SymLowerMatrix, sym_spmv

__all__ = ["SqmrParams", "SqmrStatus", "SqmrOutcome", "sqmr_solve"]

_BREAKDOWN = 1e-14
_MAX_RESTARTS = 3


class SqmrStatus(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max-iters"
    BREAKDOWN = "breakdown"


@dataclasses.dataclass(frozen=True)
class SqmrParams:
    eta: float = 0.1
    max_iters: int = 500
    true_residual_period: int = 10

    def __post_init__(self):
        if not 0 < self.eta < 1:
            raise ValueError(f"eta must lie in (0, 1), got {self.eta}")
        if self.max_iters < 1 or self.true_residual_period < 1:
            raise ValueError("max_iters and true_residual_period must be positive")


@dataclasses.dataclass(frozen=True, eq=False)
class SqmrOutcome:
    solution: np.ndarray
    iterations: int
    relres: float
    status: SqmrStatus


Preconditioner = Union[MultilevelFactorization, Callable[[np.ndarray], np.ndarray], None]


def _as_operator(M: Preconditioner):
    if M is None:
        return lambda r: r.copy()
    if isinstance(M, MultilevelFactorization):
        return lambda r: apply_preconditioner(M, r)
    return M


def sqmr_solve(K: SymLowerMatrix, M: Preconditioner, rhs, params: SqmrParams = SqmrParams(),
               x0=None) -> SqmrOutcome:
    """Solve ``K x = rhs`` to relative true residual ``params.eta``.

    ``M`` is a :class:`MultilevelFactorization`, any callable returning
    ``M^{-1} r``, or ``None`` for no preconditioning.  ``x0`` defaults to zero.
    """
    b = np.asarray(rhs, dtype=np.float64)
    n = K.order
    if b.shape != (n,):
        raise StructuralError(f"rhs length {b.shape} does not match order {n}")
    if isinstance(M, MultilevelFactorization) and M.order != n:
        raise StructuralError("preconditioner order does not match K")
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return SqmrOutcome(np.zeros(n), 0, 0.0, SqmrStatus.CONVERGED)
    precond = _as_operator(M)
    target = params.eta * bnorm

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    r = b - sym_spmv(K, x)
    true_res = float(np.linalg.norm(r))
    if true_res <= target:
        return SqmrOutcome(x, 0, true_res / bnorm, SqmrStatus.CONVERGED)
    best_x, best_res = x.copy(), true_res

    k = 0
    restarts = 0
    status = SqmrStatus.MAX_ITERS
    while k < params.max_iters:
        status, x, k = _run(K, precond, b, x, r, k, params, target)
        if status is not SqmrStatus.BREAKDOWN or restarts == _MAX_RESTARTS:
            break
        # Lanczos breakdown: one preconditioned Richardson step, then restart
        restarts += 1
        k += 1
        r = b - sym_spmv(K, x)
        x_try = x + precond(r)
        r_try = b - sym_spmv(K, x_try)
        if np.linalg.norm(r_try) >= np.linalg.norm(r):
            break
        x, r = x_try, r_try
        status = SqmrStatus.MAX_ITERS
        true_res = float(np.linalg.norm(r))
        if true_res < best_res:
            best_x, best_res = x.copy(), true_res
        if true_res <= target:
            return SqmrOutcome(x, k, true_res / bnorm, SqmrStatus.CONVERGED)

    true_res = float(np.linalg.norm(b - sym_spmv(K, x)))
    if true_res <= target:
        return SqmrOutcome(x, k, true_res / bnorm, SqmrStatus.CONVERGED)
    if true_res < best_res:
        best_x, best_res = x, true_res
    return SqmrOutcome(best_x, k, best_res / bnorm, status)


def _run(K, precond, b, x, r, k, params, target):
    """SQMR recurrences from ``(x, r)``; returns ``(status, x, k)``.

    Stops on certified convergence, breakdown, or ``params.max_iters``.
    """
    n = x.size
    tau = float(np.linalg.norm(r))
    q = precond(r)
    rho = float(r @ q)
    theta = 0.0
    d = np.zeros(n)
    if abs(rho) < _BREAKDOWN * tau * np.linalg.norm(q):
        return SqmrStatus.BREAKDOWN, x, k
    while k < params.max_iters:
        k += 1
        t = sym_spmv(K, q)
        sigma = float(q @ t)
        if abs(sigma) < _BREAKDOWN * np.linalg.norm(q) * np.linalg.norm(t):
            return SqmrStatus.BREAKDOWN, x, k
        alpha = rho / sigma
        r = r - alpha * t
        theta_old = theta
        theta = float(np.linalg.norm(r)) / tau
        c2 = 1.0 / (1.0 + theta * theta)
        tau = tau * theta * np.sqrt(c2)
        d = (c2 * theta_old * theta_old) * d + (c2 * alpha) * q
        x = x + d

        if tau * np.sqrt(k + 1.0) <= target or k % params.true_residual_period == 0:
            if float(np.linalg.norm(b - sym_spmv(K, x))) <= target:
                return SqmrStatus.CONVERGED, x, k

        u = precond(r)
        rho_old = rho
        rho = float(r @ u)
        if abs(rho) < _BREAKDOWN * np.linalg.norm(r) * np.linalg.norm(u):
            return SqmrStatus.BREAKDOWN, x, k
        q = u + (rho / rho_old) * q
    return SqmrStatus.MAX_ITERS, x, k
