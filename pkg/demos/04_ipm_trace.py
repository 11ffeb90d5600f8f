"""Solve a planted-optimum LP and watch the inexact Newton forcing term.

eta opens at the mean complementarity damped by the infeasibility and is
shrunk whenever a trial step fails to reduce infeasibility. The ratio column
is the audited true residual, always at most eta.
"""

import numpy as np

from inexact_ipm import IpmParams, ipm_solve
from inexact_ipm.generators import planted_lp
from inexact_ipm.kkt import inexactness_ratio
from inexact_ipm.ldl import FactorParams

rng = np.random.default_rng(3)
lp, (x_star, _, _) = planted_lp(50, 100, rng)
params = IpmParams(factor_params=FactorParams(final_dense_threshold=20))

ratios = []
sol = ipm_solve(lp, params, callback=lambda info: ratios.append(
    inexactness_ratio(info.kkt, info.rhs, info.outcome.solution)))

print(f"{'k':>3} {'mu':>9} {'rp':>9} {'rd':>9} {'eta':>8} {'ratio':>8} {'sqmr':>4} {'fill':>5}")
for log, ratio in zip(sol.logs, ratios):
    print(f"{log.k:>3} {log.mu:>9.2e} {log.rp:>9.2e} {log.rd:>9.2e} {log.eta:>8.1e} "
          f"{ratio:>8.1e} {log.sqmr_iters:>4} {log.fill_ratio:>5.2f}")
print(f"status {sol.status.value}; objective {sol.objective:.8f}, "
      f"planted optimum {float(lp.c @ x_star):.8f}")
