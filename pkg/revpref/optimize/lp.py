"""
Dense Linear Programming
========================

A small, deterministic two-phase tableau simplex used by the Afriat,
patch-enumeration and welfare-bound linear programs.

Architectural notes:
    - Problems are converted to standard form ``min c'y, A y = b, y >= 0``
      with ``b >= 0``: finite lower bounds are shifted out, upper-only
      bounds are reflected, free variables are split, finite upper bounds
      become explicit rows, and inequality rows receive slack columns.
    - Every row carries an artificial column in phase 1.  The artificial
      block of the final tableau is ``B^{-1}``, which gives the row duals
      without a separate solve.
    - Pivoting follows Bland's rule (lowest entering index, ratio ties broken
      by lowest basic index), so identical inputs always produce identical
      pivot sequences and identical output bits.
    - Iterations are capped at ``50 * (n + m)`` of the standard form; hitting
      the cap raises :class:`SolverError` with the basis attached.
"""

import enum
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from revpref.errors import DataValidationError, SolverError

logger = logging.getLogger(__name__)

_PIVOT_EPS = 1e-11
_CLEAN_EPS = 1e-14

_VALID_SENSES = ("<=", "=", ">=")


class LPStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LinearProgram:
    """A dense linear program ``min/max c'x`` subject to row constraints and bounds.

    Parameters
    ----------
    objective : array-like, shape (n,)
    rows : array-like, shape (m, n)
    senses : sequence of ``"<="``, ``"="``, ``">="``, length m
    rhs : array-like, shape (m,)
    bounds : array-like, shape (n, 2), optional
        Per-variable ``[lower, upper]``; ``-inf``/``inf`` allowed.  Defaults
        to ``[0, inf]`` for every variable.
    maximize : bool
        Maximize instead of minimize.
    """

    objective: np.ndarray
    rows: np.ndarray
    senses: tuple[str, ...]
    rhs: np.ndarray
    bounds: Optional[np.ndarray] = None
    maximize: bool = False

    def __post_init__(self) -> None:
        c = np.asarray(self.objective, dtype=float).ravel()
        n = c.size
        rows = np.asarray(self.rows, dtype=float)
        if rows.size == 0:
            rows = rows.reshape(0, n)
        if rows.ndim != 2 or rows.shape[1] != n:
            raise DataValidationError(
                f"rows must have shape (m, {n}), got {rows.shape}"
            )
        rhs = np.asarray(self.rhs, dtype=float).ravel()
        senses = tuple(self.senses)
        if rhs.size != rows.shape[0] or len(senses) != rows.shape[0]:
            raise DataValidationError("rows, senses and rhs disagree in length")
        bad = [s for s in senses if s not in _VALID_SENSES]
        if bad:
            raise DataValidationError(f"unknown constraint senses {bad}")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(rows)) and np.all(np.isfinite(rhs))):
            raise DataValidationError("objective, rows and rhs must be finite")
        if self.bounds is None:
            bounds = np.column_stack([np.zeros(n), np.full(n, np.inf)])
        else:
            bounds = np.asarray(self.bounds, dtype=float).reshape(n, 2)
        if np.any(bounds[:, 0] > bounds[:, 1]):
            raise DataValidationError("variable lower bound exceeds upper bound")
        if np.any(bounds[:, 0] == np.inf) or np.any(bounds[:, 1] == -np.inf):
            raise DataValidationError("bounds must admit a finite value")

        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "senses", senses)
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "bounds", bounds)

    @property
    def num_vars(self) -> int:
        return self.objective.size

    @property
    def num_rows(self) -> int:
        return self.rows.shape[0]


@dataclass(frozen=True)
class LPResult:
    """Outcome of :func:`lp_solve`.

    ``x``, ``objective`` and ``dual`` are only meaningful when ``status`` is
    :attr:`LPStatus.OPTIMAL`.  ``dual`` has one entry per original row, in the
    sign convention of the original (min or max) problem, so that
    ``rhs @ dual`` equals the optimal objective when all variables have
    bounds ``[0, inf)``.
    """

    status: LPStatus
    x: np.ndarray
    objective: float
    dual: np.ndarray
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def is_optimal(self) -> bool:
        return self.status is LPStatus.OPTIMAL


# ---------------------------------------------------------------------------
# Standard-form conversion
# ---------------------------------------------------------------------------


@dataclass
class _StandardForm:
    A: np.ndarray          # (m_std, n_std) including slacks
    b: np.ndarray          # (m_std,), nonnegative
    c: np.ndarray          # (n_std,)
    c0: float              # objective constant
    recover: np.ndarray    # (n, n_struct) x = offset + recover @ y_struct
    offset: np.ndarray     # (n,)
    n_struct: int
    row_flip: np.ndarray   # (m_std,) ±1 applied to make b >= 0
    n_orig_rows: int


def _to_standard_form(prob: LinearProgram) -> _StandardForm:
    n = prob.num_vars
    lower, upper = prob.bounds[:, 0], prob.bounds[:, 1]

    recover_cols: list[np.ndarray] = []
    offset = np.zeros(n)
    upper_rows: list[tuple[int, float]] = []   # (struct column, bound)
    for j in range(n):
        unit = np.zeros(n)
        unit[j] = 1.0
        if np.isfinite(lower[j]):
            offset[j] = lower[j]
            recover_cols.append(unit)
            if np.isfinite(upper[j]):
                upper_rows.append((len(recover_cols) - 1, upper[j] - lower[j]))
        elif np.isfinite(upper[j]):
            offset[j] = upper[j]
            recover_cols.append(-unit)
        else:
            recover_cols.append(unit)
            recover_cols.append(-unit)

    recover = np.column_stack(recover_cols) if recover_cols else np.zeros((n, 0))
    n_struct = recover.shape[1]

    rows = prob.rows @ recover
    rhs = prob.rhs - prob.rows @ offset
    senses = list(prob.senses)
    for k, ub in upper_rows:
        r = np.zeros(n_struct)
        r[k] = 1.0
        rows = np.vstack([rows, r])
        rhs = np.append(rhs, ub)
        senses.append("<=")

    m = rows.shape[0]
    n_slack = sum(1 for s in senses if s != "=")
    slack = np.zeros((m, n_slack))
    k = 0
    for i, s in enumerate(senses):
        if s == "<=":
            slack[i, k] = 1.0
            k += 1
        elif s == ">=":
            slack[i, k] = -1.0
            k += 1
    A = np.hstack([rows, slack]) if m else np.zeros((0, n_struct + n_slack))

    flip = np.where(rhs < 0, -1.0, 1.0)
    A = A * flip[:, None]
    b = rhs * flip

    sign = -1.0 if prob.maximize else 1.0
    c_orig = sign * prob.objective
    c = np.concatenate([c_orig @ recover, np.zeros(n_slack)])
    c0 = float(c_orig @ offset)

    return _StandardForm(
        A=A, b=b, c=c, c0=c0, recover=recover, offset=offset,
        n_struct=n_struct, row_flip=flip, n_orig_rows=prob.num_rows,
    )


# ---------------------------------------------------------------------------
# Tableau machinery
# ---------------------------------------------------------------------------


def _pivot(T: np.ndarray, basis: np.ndarray, r: int, col: int) -> None:
    T[r] /= T[r, col]
    factors = T[:, col].copy()
    factors[r] = 0.0
    T -= np.outer(factors, T[r])
    T[np.abs(T) < _CLEAN_EPS] = 0.0
    basis[r] = col


def _bland_iterate(
    T: np.ndarray,
    basis: np.ndarray,
    allowed: np.ndarray,
    max_iter: int,
    used: int,
) -> tuple[str, int]:
    """Run simplex iterations on ``T`` until optimal/unbounded.

    Returns the terminal state and the updated iteration count.
    """
    m = T.shape[0] - 1
    iters = used
    while True:
        reduced = T[-1, :-1]
        candidates = np.flatnonzero((reduced < -_PIVOT_EPS) & allowed)
        if candidates.size == 0:
            return "optimal", iters
        col = int(candidates[0])
        column = T[:m, col]
        positive = np.flatnonzero(column > _PIVOT_EPS)
        if positive.size == 0:
            return "unbounded", iters
        ratios = T[positive, -1] / column[positive]
        best = ratios.min()
        ties = positive[ratios <= best + 1e-12 * (1.0 + abs(best))]
        r = int(ties[np.argmin(basis[ties])])
        if iters >= max_iter:
            raise SolverError(
                "simplex iteration cap reached",
                diagnostics={"iterations": iters, "basis": basis.tolist()},
            )
        _pivot(T, basis, r, col)
        iters += 1


def lp_solve(prob: LinearProgram, *, max_iter: Optional[int] = None) -> LPResult:
    """Solve a :class:`LinearProgram` with the two-phase Bland simplex.

    Parameters
    ----------
    prob : LinearProgram
    max_iter : int, optional
        Overrides the ``50 * (n + m)`` cap.

    Returns
    -------
    LPResult

    Raises
    ------
    SolverError
        If the iteration cap is reached.
    """
    std = _to_standard_form(prob)
    m, n_std = std.A.shape
    if max_iter is None:
        max_iter = 50 * (n_std + m) + 50

    # Columns: [structural + slack | artificial]
    T = np.zeros((m + 1, n_std + m + 1))
    T[:m, :n_std] = std.A
    T[:m, n_std:n_std + m] = np.eye(m)
    T[:m, -1] = std.b
    basis = np.arange(n_std, n_std + m)

    # Phase 1: minimize the sum of artificials.
    T[-1, :n_std] = -std.A.sum(axis=0)
    T[-1, -1] = -std.b.sum()
    allowed = np.zeros(n_std + m, dtype=bool)
    allowed[:n_std] = True
    _, iters = _bland_iterate(T, basis, allowed, max_iter, 0)

    feas_tol = 1e-9 * max(1.0, float(np.abs(std.b).max(initial=0.0)))
    if -T[-1, -1] > feas_tol:
        logger.debug("LP infeasible: phase-1 objective %.3e", -T[-1, -1])
        return LPResult(
            status=LPStatus.INFEASIBLE,
            x=np.full(prob.num_vars, np.nan),
            objective=float("nan"),
            dual=np.full(prob.num_rows, np.nan),
            iterations=iters,
            diagnostics={"phase1_objective": float(-T[-1, -1])},
        )

    # Drive remaining artificials out of the basis where possible.
    redundant = 0
    for r in range(m):
        if basis[r] >= n_std:
            nz = np.flatnonzero(np.abs(T[r, :n_std]) > _PIVOT_EPS)
            if nz.size:
                _pivot(T, basis, r, int(nz[0]))
            else:
                redundant += 1

    # Phase 2.
    c_full = np.concatenate([std.c, np.zeros(m)])
    cb = c_full[basis]
    T[-1, :-1] = c_full - cb @ T[:m, :-1]
    T[-1, -1] = -cb @ T[:m, -1]
    status, iters = _bland_iterate(T, basis, allowed, max_iter, iters)

    if status == "unbounded":
        return LPResult(
            status=LPStatus.UNBOUNDED,
            x=np.full(prob.num_vars, np.nan),
            objective=float("-inf") if not prob.maximize else float("inf"),
            dual=np.full(prob.num_rows, np.nan),
            iterations=iters,
        )

    y = np.zeros(n_std + m)
    y[basis] = T[:m, -1]
    x = std.offset + std.recover @ y[:std.n_struct]

    sign = -1.0 if prob.maximize else 1.0
    dual_std = c_full[basis] @ T[:m, n_std:n_std + m]
    dual = sign * (dual_std * std.row_flip)[:std.n_orig_rows]

    objective = float(prob.objective @ x)
    logger.debug(
        "LP optimal: objective=%.6g iterations=%d redundant_rows=%d",
        objective, iters, redundant,
    )
    return LPResult(
        status=LPStatus.OPTIMAL,
        x=x,
        objective=objective,
        dual=dual,
        iterations=iters,
        diagnostics={"redundant_rows": redundant},
    )


def feasible_point(
    rows: np.ndarray,
    rhs: np.ndarray,
    senses: Sequence[str],
    bounds: Optional[np.ndarray] = None,
) -> Optional[np.ndarray]:
    """Return a vertex of ``{x : rows x (senses) rhs, bounds}`` or ``None``."""
    rows = np.asarray(rows, dtype=float)
    n = rows.shape[1]
    result = lp_solve(LinearProgram(np.zeros(n), rows, tuple(senses), rhs, bounds))
    return result.x if result.is_optimal else None
