"""Read an MPS model, convert it to standard form, solve, and map back.

Run:  python3 demos/01_mps_round_trip.py [model.mps]
"""

import pathlib
import sys

from inexact_ipm import ipm_solve, read_mps, recover_solution, row_violations, to_standard_form
from inexact_ipm.mps import model_objective

HERE = pathlib.Path(__file__).resolve().parent
path = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else HERE.parent / "tests/data/fx_fr_mi.mps"

model = read_mps(path)
lp, varmap = to_standard_form(model)
print(f"{path.name}: {len(model.constraint_rows())} rows, {len(model.columns)} columns in the model")
print(f"standard form: {lp.m} equality rows, {lp.n} nonnegative columns "
      f"(free columns split, bounded ones shifted or reflected)")

sol = ipm_solve(lp)
values = recover_solution(varmap, sol.x)
print(f"status {sol.status.value} after {len(sol.logs)} iterations")
for name, v in values.items():
    print(f"  {name:>8} = {v: .6f}")
print(f"objective (model)         {model_objective(model, values):.8f}")
print(f"objective (standard form) {sol.objective:.8f}")
print(f"worst row violation       {max(row_violations(model, values).values()):.1e}")
