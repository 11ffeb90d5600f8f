"""Infeasible primal-dual path-following IPM with inexact Newton directions.

Every step assembles the augmented KKT system, factors it with the multilevel
incomplete LDL^T, and solves it with SQMR only to relative accuracy ``eta``.
If the trial point does not reduce the primal/dual infeasibility enough, the
same factorization is reused to solve more accurately; persistent failure
triggers one refactorization with tighter drop tolerances.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import time
from typing import Callable, List, Optional

import numpy as np

from .errors import FactorizationError
from .kkt import (Directions, Iterate, KktSystem, Residuals, assemble_kkt, assemble_rhs,
                  compute_residuals, duality_mu, recover_directions)
from .ldl import FactorParams, MultilevelFactorization, factor_multilevel, fill_ratio
from .mps import StandardFormLP
from .sqmr import SqmrOutcome, SqmrParams, SqmrStatus, sqmr_solve

logger = logging.getLogger(__name__)

__all__ = [
    "IpmParams",
    "IterationLog",
    "IpmStatus",
    "Solution",
    "StepInfo",
    "NumericalFailure",
    "initial_point",
    "step_lengths",
    "choose_eta",
    "ipm_step",
    "check_convergence",
    "ipm_solve",
]

_DECREASE = 0.1
_MAX_SHRINKS = 3
# preconditioner-only regularization, relative to max|K|, tried in turn
_PRECOND_SHIFTS = (1e-12, 1e-10, 1e-8)


class IpmStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    MAX_ITERS = "max-iters"
    NUMERICAL_FAILURE = "numerical-failure"


class NumericalFailure(RuntimeError):
    pass


@dataclasses.dataclass(frozen=True)
class IpmParams:
    tol_p: float = 1e-8
    tol_d: float = 1e-8
    tol_gap: float = 1e-8
    sigma: float = 0.1
    boundary_fraction: float = 0.99
    eta_max: float = 0.1
    eta_min: float = 1e-6
    eta_shrink: float = 0.1
    max_iters: int = 200
    factor_params: FactorParams = FactorParams()
    sqmr_max_iters: int = 500
    true_residual_period: int = 10
    delta_p: float = 0.0
    delta_d: float = 0.0

    def __post_init__(self):
        if min(self.tol_p, self.tol_d, self.tol_gap) <= 0:
            raise ValueError("tolerances must be positive")
        for name in ("sigma", "boundary_fraction", "eta_shrink"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if not 0 < self.eta_min <= self.eta_max < 1:
            raise ValueError("need 0 < eta_min <= eta_max < 1")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.delta_p < 0 or self.delta_d < 0:
            raise ValueError("regularization must be nonnegative")


@dataclasses.dataclass
class IterationLog:
    """Statistics of one accepted step (residuals measured where it started)."""

    k: int
    mu: float
    rp: float
    rd: float
    gap: float
    eta: float
    sqmr_iters: int
    resolves: int
    fill_ratio: float
    t_factor: float
    t_solve: float
    relres: float = 0.0
    alpha_p: float = 0.0
    alpha_d: float = 0.0
    refactored: bool = False
    precond_shift: float = 0.0

    def as_dict(self):
        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True, eq=False)
class StepInfo:
    """Everything computed in one accepted step, handed to ``callback``."""

    iterate: Iterate
    residuals: Residuals
    kkt: KktSystem
    rhs: np.ndarray
    factorization: MultilevelFactorization
    outcome: SqmrOutcome
    directions: Directions
    new_iterate: Iterate
    log: IterationLog
    factor_params: FactorParams


@dataclasses.dataclass(frozen=True, eq=False)
class Solution:
    status: IpmStatus
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    objective: float
    logs: List[IterationLog]
    message: str = ""


def initial_point(lp: StandardFormLP) -> Iterate:
    """``x = z = beta e``, ``y = 0`` with ``beta = max(1, |b|_inf, |c|_inf)``."""
    beta = max(1.0,
               float(np.max(np.abs(lp.b))) if lp.m else 0.0,
               float(np.max(np.abs(lp.c))) if lp.n else 0.0)
    x = np.full(lp.n, beta)
    z = np.full(lp.n, beta)
    it = Iterate(x, np.zeros(lp.m), z)
    return dataclasses.replace(it, mu=duality_mu(it, 1.0))


def _max_step(v, dv, fraction):
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return min(1.0, fraction * float(np.min(-v[neg] / dv[neg])))


def step_lengths(it: Iterate, d: Directions, boundary_fraction: float):
    """Fraction-to-boundary step lengths ``(alpha_p, alpha_d)``."""
    return (_max_step(it.x, d.d_x, boundary_fraction),
            _max_step(it.z, d.d_z, boundary_fraction))


def choose_eta(mean_gap: float, rp: float, rd: float, p: IpmParams) -> float:
    """Opening solve accuracy: ``x^T z / n`` damped by the infeasibility, clamped."""
    return float(np.clip(mean_gap / (1.0 + rp + rd), p.eta_min, p.eta_max))


def check_convergence(lp: StandardFormLP, it: Iterate, p: IpmParams,
                      res: Optional[Residuals] = None) -> bool:
    if res is None:
        res = compute_residuals(lp, it)
    rp, rd, _ = res.norms
    gap = it.gap
    return (rp / (1.0 + np.linalg.norm(lp.b)) <= p.tol_p
            and rd / (1.0 + np.linalg.norm(lp.c)) <= p.tol_d
            and gap / (1.0 + abs(float(lp.c @ it.x))) <= p.tol_gap)


def ipm_step(lp: StandardFormLP, it: Iterate, p: IpmParams, k: int = 0,
             factor_params: Optional[FactorParams] = None):
    """One inexact Newton step.

    Returns ``(new_iterate, IterationLog, StepInfo)``.  ``StepInfo.factor_params``
    carries the (possibly tightened) factorization parameters to use next.
    Raises :class:`NumericalFailure` when no acceptable step is found.
    """
    fp = factor_params or p.factor_params
    m, n = lp.m, lp.n
    mu = duality_mu(it, p.sigma)
    it = dataclasses.replace(it, mu=mu)
    res = compute_residuals(lp, it)
    rp, rd, _ = res.norms
    gap = it.gap
    bscale = 1.0 + float(np.linalg.norm(lp.b))
    cscale = 1.0 + float(np.linalg.norm(lp.c))

    sys = assemble_kkt(lp.A, it, p.delta_p, p.delta_d)
    rhs = assemble_rhs(res, it)

    t_factor = t_solve = 0.0

    def factor(params):
        """Factor K, or K shifted quasi-definite if K is numerically singular.

        The shift only enters the preconditioner; SQMR always solves with K.
        """
        nonlocal t_factor
        t0 = time.perf_counter()
        try:
            try:
                return factor_multilevel(sys.K, params), 0.0
            except FactorizationError as exc:
                err = exc
            scale = sys.K.max_abs()
            for rel in _PRECOND_SHIFTS:
                shifted = assemble_kkt(lp.A, it, p.delta_p + rel * scale, p.delta_d + rel * scale)
                try:
                    F = factor_multilevel(shifted.K, params)
                except FactorizationError as exc:
                    err = exc
                    continue
                logger.info("step %d: K numerically singular (%s); preconditioner shifted by "
                            "%.1e", k, err, rel * scale)
                return F, rel * scale
            raise NumericalFailure(f"step {k}: KKT matrix numerically singular ({err})") from err
        finally:
            t_factor += time.perf_counter() - t0

    refactored = False
    F, shift = factor(fp)

    eta = choose_eta(gap / n if n else 0.0, rp, rd, p)
    shrinks = 0
    resolves = 0
    sqmr_iters = 0
    x0 = None
    while True:
        t0 = time.perf_counter()
        out = sqmr_solve(sys.K, F, rhs,
                         SqmrParams(eta, p.sqmr_max_iters, p.true_residual_period), x0=x0)
        t_solve += time.perf_counter() - t0
        sqmr_iters += out.iterations
        if out.status is SqmrStatus.CONVERGED:
            d = recover_directions(out.solution[:m], out.solution[m:], it, res)
            alpha_p, alpha_d = step_lengths(it, d, p.boundary_fraction)
            x_new = it.x + alpha_p * d.d_x
            y_new = it.y + alpha_d * d.d_y
            z_new = it.z + alpha_d * d.d_z
            trial = Iterate(x_new, y_new, z_new, mu)
            rp_new, rd_new, _ = compute_residuals(lp, trial).norms
            bad_p = rp_new > (1.0 - _DECREASE * alpha_p) * rp and rp > p.tol_p * bscale
            bad_d = rd_new > (1.0 - _DECREASE * alpha_d) * rd and rd > p.tol_d * cscale
            if not (bad_p or bad_d):
                break
            reason = "insufficient infeasibility decrease"
        else:
            reason = f"sqmr {out.status.value} at relres {out.relres:.2e}"
        if out.status is SqmrStatus.CONVERGED and shrinks < _MAX_SHRINKS:
            shrinks += 1
            resolves += 1
            eta *= p.eta_shrink
            x0 = out.solution
            logger.debug("step %d: %s; re-solving with eta=%.1e", k, reason, eta)
            continue
        if refactored:
            raise NumericalFailure(f"step {k}: {reason} after refactorization")
        fp = fp.tightened()
        refactored = True
        resolves += 1
        shrinks = 0
        x0 = None
        logger.info("step %d: %s; refactoring with tau_L=%.1e tau_S=%.1e",
                    k, reason, fp.tau_L, fp.tau_S)
        F, shift = factor(fp)

    fr = fill_ratio(F, lp.A) if lp.A.nnz else 0.0
    log = IterationLog(k=k, mu=float(mu), rp=rp, rd=rd, gap=float(gap), eta=float(eta),
                       sqmr_iters=sqmr_iters, resolves=resolves, fill_ratio=float(fr),
                       t_factor=t_factor, t_solve=t_solve, relres=float(out.relres),
                       alpha_p=alpha_p, alpha_d=alpha_d, refactored=refactored,
                       precond_shift=shift)
    info = StepInfo(it, res, sys, rhs, F, out, d, trial, log, fp)
    return trial, log, info


def ipm_solve(lp: StandardFormLP, p: IpmParams = IpmParams(),
              callback: Optional[Callable[[StepInfo], None]] = None) -> Solution:
    """Run the IPM from :func:`initial_point` until convergence or failure."""
    logs: List[IterationLog] = []
    if lp.n == 0:
        return Solution(IpmStatus.OPTIMAL, np.zeros(0), np.zeros(lp.m), np.zeros(0),
                        lp.offset, logs, "empty problem")
    it = initial_point(lp)
    fp = p.factor_params
    status = IpmStatus.MAX_ITERS
    message = ""
    for k in range(p.max_iters + 1):
        if check_convergence(lp, it, p):
            status = IpmStatus.OPTIMAL
            break
        if k == p.max_iters:
            message = f"no convergence in {p.max_iters} iterations"
            break
        try:
            it_new, log, info = ipm_step(lp, it, p, k, fp)
        except NumericalFailure as exc:
            status = IpmStatus.NUMERICAL_FAILURE
            message = str(exc)
            logger.warning("%s", exc)
            break
        fp = info.factor_params
        logs.append(log)
        logger.info("%3d  mu=%.2e  rp=%.2e  rd=%.2e  gap=%.2e  eta=%.1e  sqmr=%d  fill=%.2f",
                    k, log.mu, log.rp, log.rd, log.gap, log.eta, log.sqmr_iters,
                    log.fill_ratio)
        if callback is not None:
            callback(info)
        it = it_new
    return Solution(status, it.x, it.y, it.z, lp.objective(it.x), logs, message)
