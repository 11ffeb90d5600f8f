"""MPS reader and reduction of a bounded LP to ``min c^T x, Ax = b, x >= 0``.

Only the common subset of the format is accepted: NAME, ROWS, COLUMNS, RHS,
BOUNDS and ENDATA sections, ``*`` comment lines, and the bound types LO, UP,
FX, FR and MI.  Fields are split on whitespace, so both fixed-column files
without embedded blanks and free-format files are read the same way.
"""

from __future__ import annotations

import dataclasses
import io
import logging
import math
from typing import Dict, List, Tuple

import numpy as np

from .errors import ModelError, MpsParseError, StructuralError
from .sparse import SparseColMatrix, from_triplets

logger = logging.getLogger(__name__)

__all__ = [
    "LpModel",
    "StandardFormLP",
    "ColumnRecord",
    "VarMap",
    "parse_mps",
    "read_mps",
    "to_standard_form",
    "recover_solution",
    "model_objective",
    "row_violations",
]

_SECTIONS = {"NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"}
_UNSUPPORTED = {"RANGES", "OBJSENSE", "SOS", "QUADOBJ", "QMATRIX", "QSECTION"}
_BOUND_TYPES = {"LO", "UP", "FX", "FR", "MI"}


@dataclasses.dataclass
class LpModel:
    """In-memory LP as read from an MPS file (minimization)."""

    name: str = ""
    objective_name: str = ""
    rows: List[Tuple[str, str]] = dataclasses.field(default_factory=list)
    columns: List[Tuple[str, List[Tuple[str, float]]]] = dataclasses.field(default_factory=list)
    rhs: Dict[str, float] = dataclasses.field(default_factory=dict)
    bounds: Dict[str, Tuple[float, float]] = dataclasses.field(default_factory=dict)

    def bound(self, col):
        return self.bounds.get(col, (0.0, math.inf))

    def constraint_rows(self):
        return [(r, s) for r, s in self.rows if s != "N"]


@dataclasses.dataclass(frozen=True, eq=False)
class StandardFormLP:
    """``min c^T x + offset  s.t.  A x = b, x >= 0``."""

    A: SparseColMatrix
    b: np.ndarray
    c: np.ndarray
    offset: float = 0.0
    name: str = ""

    def __post_init__(self):
        b = np.asarray(self.b, dtype=np.float64)
        c = np.asarray(self.c, dtype=np.float64)
        if b.shape != (self.A.nrows,) or c.shape != (self.A.ncols,):
            raise StructuralError("b/c lengths do not match A")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(c))
                and np.all(np.isfinite(self.A.values))):
            raise ModelError("standard-form data must be finite")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def m(self):
        return self.A.nrows

    @property
    def n(self):
        return self.A.ncols

    def objective(self, x):
        return float(self.c @ x) + self.offset


@dataclasses.dataclass(frozen=True)
class ColumnRecord:
    """How one original column is expressed in standard-form columns.

    ``value = shift + sum(sign * x_std[index] for index, sign in zip(indices, signs))``
    """

    name: str
    shift: float
    indices: Tuple[int, ...]
    signs: Tuple[float, ...]


@dataclasses.dataclass(frozen=True)
class VarMap:
    columns: Tuple[ColumnRecord, ...]
    row_slacks: Dict[str, int]
    bound_slacks: Dict[str, int]
    n_std: int


# --------------------------------------------------------------------------
# parsing


def _number(tok, lineno):
    try:
        v = float(tok)
    except ValueError:
        raise MpsParseError(f"expected a number, got {tok!r}", lineno) from None
    if not math.isfinite(v):
        raise MpsParseError(f"non-finite number {tok!r}", lineno)
    return v


def _pairs(tokens, lineno):
    """Split ``[setname] name value [name value]`` into the pair list."""
    if len(tokens) in (3, 5):
        tokens = tokens[1:]
    if len(tokens) not in (2, 4):
        raise MpsParseError("expected one or two (name, value) pairs", lineno)
    return [(tokens[i], _number(tokens[i + 1], lineno)) for i in range(0, len(tokens), 2)]


def parse_mps(text) -> LpModel:
    """Parse MPS text (a string or a text stream) into an :class:`LpModel`."""
    if isinstance(text, str):
        text = io.StringIO(text)
    model = LpModel()
    row_sense: Dict[str, str] = {}
    col_index: Dict[str, int] = {}
    col_seen: Dict[str, set] = {}
    section = None
    saw_end = False
    for lineno, raw in enumerate(text, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("*"):
            continue
        tokens = line.split()
        if not line[0].isspace():
            head = tokens[0].upper()
            if head in _SECTIONS:
                section = head
                if head == "NAME":
                    model.name = " ".join(tokens[1:])
                elif head == "ENDATA":
                    saw_end = True
                    break
                continue
            if head in _UNSUPPORTED:
                raise MpsParseError(f"unsupported section {head}", lineno)
            if section is None or len(tokens) == 1:
                raise MpsParseError(f"unknown section {tokens[0]!r}", lineno)
        if section == "ROWS":
            if len(tokens) != 2:
                raise MpsParseError("ROWS entry needs a sense and a name", lineno)
            sense, name = tokens[0].upper(), tokens[1]
            if sense not in ("E", "L", "G", "N"):
                raise MpsParseError(f"unknown row sense {tokens[0]!r}", lineno)
            if name in row_sense:
                raise MpsParseError(f"row {name!r} declared twice", lineno)
            row_sense[name] = sense
            if sense == "N":
                if model.objective_name:
                    logger.warning("ignoring extra objective row %r (line %d)", name, lineno)
                    continue
                model.objective_name = name
            model.rows.append((name, sense))
        elif section == "COLUMNS":
            if "'MARKER'" in tokens:
                raise MpsParseError("integer markers are not supported", lineno)
            if len(tokens) not in (3, 5):
                raise MpsParseError("COLUMNS entry needs one or two (row, value) pairs", lineno)
            col = tokens[0]
            if col not in col_index:
                col_index[col] = len(model.columns)
                model.columns.append((col, []))
                col_seen[col] = set()
            entries = model.columns[col_index[col]][1]
            for row, val in _pairs(tokens, lineno):
                if row not in row_sense:
                    raise MpsParseError(f"column {col!r} references undeclared row {row!r}", lineno)
                if row in col_seen[col]:
                    raise MpsParseError(f"duplicate entry for column {col!r} in row {row!r}", lineno)
                col_seen[col].add(row)
                if row_sense[row] == "N" and row != model.objective_name:
                    continue
                entries.append((row, val))
        elif section == "RHS":
            for row, val in _pairs(tokens, lineno):
                if row not in row_sense:
                    raise MpsParseError(f"RHS references undeclared row {row!r}", lineno)
                if row_sense[row] == "N" and row != model.objective_name:
                    continue
                model.rhs[row] = val
        elif section == "BOUNDS":
            _parse_bound(tokens, lineno, model, col_index)
        else:
            raise MpsParseError(f"data line outside a known section: {line.strip()!r}", lineno)
    if not saw_end:
        logger.warning("MPS input has no ENDATA line")
    if not model.objective_name:
        raise MpsParseError("no objective (N) row declared")
    for col, (lo, up) in model.bounds.items():
        if lo > up:
            raise ModelError(f"column {col!r} has lower bound {lo} above upper bound {up}")
    return model


def _parse_bound(tokens, lineno, model, col_index):
    kind = tokens[0].upper()
    if kind not in _BOUND_TYPES:
        raise MpsParseError(f"unsupported bound type {tokens[0]!r}", lineno)
    needs_value = kind in ("LO", "UP", "FX")
    if needs_value:
        if len(tokens) == 4:
            col, val = tokens[2], _number(tokens[3], lineno)
        elif len(tokens) == 3:
            col, val = tokens[1], _number(tokens[2], lineno)
        else:
            raise MpsParseError(f"{kind} bound needs a column and a value", lineno)
    else:
        if len(tokens) == 3:
            col = tokens[2]
        elif len(tokens) == 2:
            col = tokens[1]
        elif len(tokens) == 4:
            col = tokens[2]  # some writers emit a dummy value
        else:
            raise MpsParseError(f"{kind} bound needs a column", lineno)
        val = None
    if col not in col_index:
        raise MpsParseError(f"bound on undeclared column {col!r}", lineno)
    lo, up = model.bound(col)
    if kind == "LO":
        lo = val
    elif kind == "UP":
        if val < 0 and lo == 0.0:
            logger.warning("negative UP bound on %r with zero lower bound: lower set to -inf "
                           "(line %d)", col, lineno)
            lo = -math.inf
        up = val
    elif kind == "FX":
        lo = up = val
    elif kind == "FR":
        lo, up = -math.inf, math.inf
    elif kind == "MI":
        lo = -math.inf
    model.bounds[col] = (lo, up)


def read_mps(path) -> LpModel:
    with open(path, "r", encoding="utf-8") as fh:
        model = parse_mps(fh)
    if not model.name:
        model.name = str(path)
    return model


# --------------------------------------------------------------------------
# conversion


def to_standard_form(model: LpModel) -> Tuple[StandardFormLP, VarMap]:
    """Reduce ``model`` to standard form.

    Column layout: structural columns (free columns contribute ``x+`` then
    ``x-``), then one slack per L/G row, then one slack per finite upper bound.
    Row layout: constraint rows in declaration order, then upper-bound rows.
    Fixed columns are substituted and dropped.  Rows left without any
    coefficient are dropped when their right-hand side is zero.
    """
    cons = model.constraint_rows()
    row_pos = {name: i for i, (name, _) in enumerate(cons)}
    m0 = len(cons)
    b = np.array([model.rhs.get(name, 0.0) for name, _ in cons], dtype=np.float64)
    offset = -model.rhs.get(model.objective_name, 0.0)

    rows: List[int] = []
    cols: List[int] = []
    vals: List[float] = []
    cost: List[float] = []
    records: List[ColumnRecord] = []
    ub_rows: List[Tuple[str, int, float]] = []  # (column name, std column, rhs)
    ncol = 0

    for name, entries in model.columns:
        lo, up = model.bound(name)
        if lo > up:
            raise ModelError(f"column {name!r}: lower bound {lo} exceeds upper bound {up}")
        obj = 0.0
        coefs = []
        for row, val in entries:
            if row == model.objective_name:
                obj += val
            else:
                coefs.append((row_pos[row], val))

        def put(sign):
            nonlocal ncol
            for r, v in coefs:
                rows.append(r)
                cols.append(ncol)
                vals.append(sign * v)
            cost.append(sign * obj)
            ncol += 1
            return ncol - 1

        def shift_by(value):
            nonlocal offset
            for r, v in coefs:
                b[r] -= v * value
            offset += obj * value

        if lo == up:
            shift_by(lo)
            records.append(ColumnRecord(name, lo, (), ()))
        elif math.isfinite(lo):
            shift_by(lo)
            j = put(1.0)
            records.append(ColumnRecord(name, lo, (j,), (1.0,)))
            if math.isfinite(up):
                ub_rows.append((name, j, up - lo))
        elif math.isfinite(up):
            shift_by(up)
            j = put(-1.0)
            records.append(ColumnRecord(name, up, (j,), (-1.0,)))
        else:
            jp = put(1.0)
            jm = put(-1.0)
            records.append(ColumnRecord(name, 0.0, (jp, jm), (1.0, -1.0)))

    row_slacks = {}
    for name, sense in cons:
        if sense in ("L", "G"):
            rows.append(row_pos[name])
            cols.append(ncol)
            vals.append(1.0 if sense == "L" else -1.0)
            cost.append(0.0)
            row_slacks[name] = ncol
            ncol += 1

    bound_slacks = {}
    b_extra = []
    for k, (name, j, rhs) in enumerate(ub_rows):
        r = m0 + k
        rows.extend((r, r))
        cols.extend((j, ncol))
        vals.extend((1.0, 1.0))
        cost.append(0.0)
        bound_slacks[name] = ncol
        b_extra.append(rhs)
        ncol += 1

    m = m0 + len(ub_rows)
    b = np.concatenate([b, np.asarray(b_extra, dtype=np.float64)])
    A = from_triplets(nrows=m, ncols=ncol, rows=rows, cols=cols, values=vals)

    counts = np.bincount(A.rowind, minlength=m) if A.nnz else np.zeros(m, dtype=np.int64)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        scale = 1.0 + np.max(np.abs(b)) if b.size else 1.0
        bad = [cons[i][0] for i in empty if abs(b[i]) > 1e-12 * scale]
        if bad:
            raise ModelError(f"rows {bad} have no coefficients but a nonzero right-hand side")
        keep = np.flatnonzero(counts > 0)
        newpos = -np.ones(m, dtype=np.int64)
        newpos[keep] = np.arange(keep.size)
        A = SparseColMatrix(keep.size, ncol, A.colptr, newpos[A.rowind], A.values)
        b = b[keep]
        logger.info("dropped %d empty rows", empty.size)

    lp = StandardFormLP(A, b, np.asarray(cost, dtype=np.float64), offset, model.name)
    return lp, VarMap(tuple(records), row_slacks, bound_slacks, ncol)


def recover_solution(varmap: VarMap, x_std) -> Dict[str, float]:
    """Map a standard-form point back to values of the original columns."""
    x_std = np.asarray(x_std, dtype=np.float64)
    if x_std.shape != (varmap.n_std,):
        raise StructuralError(
            f"expected standard-form vector of length {varmap.n_std}, got {x_std.shape}")
    out = {}
    for rec in varmap.columns:
        value = rec.shift
        for j, s in zip(rec.indices, rec.signs):
            value += s * x_std[j]
        out[rec.name] = value
    return out


def model_objective(model: LpModel, values: Dict[str, float]) -> float:
    total = -model.rhs.get(model.objective_name, 0.0)
    for name, entries in model.columns:
        for row, val in entries:
            if row == model.objective_name:
                total += val * values[name]
    return total


def row_violations(model: LpModel, values: Dict[str, float]) -> Dict[str, float]:
    """Constraint and bound violations of ``values`` in the original model.

    Keys are row names, and ``"bound:<column>"`` for bound violations.
    """
    activity = {name: 0.0 for name, _ in model.constraint_rows()}
    for name, entries in model.columns:
        for row, val in entries:
            if row in activity:
                activity[row] += val * values[name]
    viol = {}
    for name, sense in model.constraint_rows():
        lhs, rhs = activity[name], model.rhs.get(name, 0.0)
        if sense == "E":
            viol[name] = abs(lhs - rhs)
        elif sense == "L":
            viol[name] = max(0.0, lhs - rhs)
        else:
            viol[name] = max(0.0, rhs - lhs)
    for name, _ in model.columns:
        lo, up = model.bound(name)
        v = values[name]
        viol["bound:" + name] = max(0.0, lo - v, v - up)
    return viol
