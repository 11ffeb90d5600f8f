"""SQMR on a symmetric indefinite KKT system with and without dropping.

An exact factorization makes SQMR converge in one step; a sparser incomplete
factorization needs more iterations to reach the same tolerance.
"""

import numpy as np

from inexact_ipm.generators import random_kkt
from inexact_ipm.ldl import FactorParams, factor_multilevel
from inexact_ipm.sqmr import SqmrParams, sqmr_solve

rng = np.random.default_rng(2)
sys = random_kkt(60, 140, rng)[0]
b = rng.standard_normal(sys.K.order)
for tau in (0.0, 1e-3, 1e-2, 1e-1):
    F = factor_multilevel(sys.K, FactorParams(tau_L=tau, tau_S=tau, final_dense_threshold=10))
    out = sqmr_solve(sys.K, F, b, SqmrParams(eta=1e-10, max_iters=300))
    print(f"tau {tau:7.0e}: factor nnz {F.nnz_total:6d}, {out.status.value:<10} "
          f"after {out.iterations:3d} iterations, true relres {out.relres:.1e}")
