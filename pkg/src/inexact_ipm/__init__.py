"""Inexact primal-dual interior point method for linear programming.

Newton directions come from the augmented KKT system, solved by SQMR with a
multilevel incomplete LDL^T preconditioner.
"""

from .errors import (DataError, FactorizationError, ModelError, MpsParseError, StateError,
                     StructuralError)
from .ipm import IpmParams, IpmStatus, IterationLog, Solution, ipm_solve
from .kkt import Iterate, assemble_kkt, assemble_rhs, compute_residuals
from .ldl import (FactorParams, MultilevelFactorization, apply_preconditioner,
                  factor_multilevel, fill_ratio)
from .mps import (LpModel, StandardFormLP, parse_mps, read_mps, recover_solution,
                  row_violations, to_standard_form)
from .sparse import SparseColMatrix, SymLowerMatrix, from_triplets
from .sqmr import SqmrParams, SqmrStatus, sqmr_solve

__version__ = "0.1.0"
