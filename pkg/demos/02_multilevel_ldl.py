"""Multilevel incomplete LDL^T on a KKT matrix: levels, fill, and accuracy.

Tightening kappa postpones more pivots into deeper Schur levels; raising
tau_L drops more of L. The preconditioned residual shows what that costs.
"""

import numpy as np

from inexact_ipm.generators import random_kkt
from inexact_ipm.ldl import FactorParams, apply_preconditioner, expand_dense, factor_multilevel

rng = np.random.default_rng(1)
sys, lp, _ = random_kkt(40, 80, rng)
K = sys.K.to_dense()
b = rng.standard_normal(sys.K.order)
print(f"KKT order {sys.K.order}, nnz(A) = {lp.A.nnz}")
print(f"{'kappa':>6} {'tau_L':>7} {'levels':>6} {'final':>5} {'nnz':>6} "
      f"{'|K-M|/|K|':>10} {'|b-K M^-1 b|/|b|':>17}")
for kappa in (2.0, 5.0, 1e12):
    for tau in (0.0, 1e-3, 1e-2):
        F = factor_multilevel(sys.K, FactorParams(kappa=kappa, tau_L=tau, tau_S=tau,
                                                  final_dense_threshold=10))
        err = np.linalg.norm(expand_dense(F) - K) / np.linalg.norm(K)
        rel = np.linalg.norm(b - K @ apply_preconditioner(F, b)) / np.linalg.norm(b)
        print(f"{kappa:>6.0e} {tau:>7.0e} {len(F.levels):>6} {F.final_order:>5} "
              f"{F.nnz_total:>6} {err:>10.1e} {rel:>17.1e}")
