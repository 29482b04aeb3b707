"""
Constrained Least Squares
=========================

Weighted least squares with variable floors and optional linear equalities,

    min_x  sum_i w_i (D x - y)_i^2   s.t.  x >= lb,  E x = f,

solved by a primal active-set method.  This is the projection engine behind
the J_N statistic, the tightened bootstrap estimators and J_N(theta).

Architectural notes:
    - Floors are handled by the shift ``z = x - lb`` so the working problem
      only carries ``z >= 0``.
    - Without equalities the method is the Lawson-Hanson / Bro-de Jong
      active-set NNLS started from ``z = 0``.  With equalities, a feasible
      vertex from :func:`revpref.optimize.lp.feasible_point` seeds the free
      set and each subproblem is solved on the null space of the free
      columns of ``E`` (no penalty terms).
    - Subproblems use minimum-norm least squares so rank-deficient designs
      (more types than patches) still give a well-defined step; the fitted
      values ``D x`` are unique even when ``x`` is not.
    - The entering rule is "most negative multiplier, lowest index on ties",
      and blocking ties resolve to the lowest index, so the iterate sequence
      is a deterministic function of the inputs.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from revpref.errors import DataValidationError, InfeasibleConstraintsError, SolverError
from revpref.optimize.lp import feasible_point

logger = logging.getLogger(__name__)

_KKT_TOL = 1e-10
_STEP_TOL = 1e-13


@dataclass(frozen=True)
class ConstrainedLeastSquares:
    """Problem data for :func:`cls_solve`.

    Parameters
    ----------
    design : array-like, shape (I, H)
    target : array-like, shape (I,)
    weights : array-like, shape (I,), optional
        Diagonal of the weighting matrix; strictly positive.  Defaults to ones.
    lower_bounds : array-like, shape (H,), optional
        Nonnegative floors.  Defaults to zeros.
    equalities : sequence of (vector, scalar), optional
        Linear equality constraints ``vector @ x == scalar``.
    """

    design: np.ndarray
    target: np.ndarray
    weights: Optional[np.ndarray] = None
    lower_bounds: Optional[np.ndarray] = None
    equalities: Sequence[tuple[np.ndarray, float]] = ()

    def __post_init__(self) -> None:
        D = np.atleast_2d(np.asarray(self.design, dtype=float))
        I, H = D.shape
        y = np.asarray(self.target, dtype=float).ravel()
        if y.size != I:
            raise DataValidationError(
                f"target has length {y.size}, design has {I} rows"
            )
        w = np.ones(I) if self.weights is None else np.asarray(self.weights, dtype=float).ravel()
        if w.size != I or np.any(w <= 0):
            raise DataValidationError("weights must be positive with one entry per row")
        lb = np.zeros(H) if self.lower_bounds is None else np.asarray(self.lower_bounds, dtype=float).ravel()
        if lb.size != H or np.any(lb < 0):
            raise DataValidationError("lower bounds must be nonnegative with one entry per column")
        eqs = tuple(
            (np.asarray(v, dtype=float).ravel(), float(s)) for v, s in self.equalities
        )
        if any(v.size != H for v, _ in eqs):
            raise DataValidationError("equality vectors must have one entry per column")

        object.__setattr__(self, "design", D)
        object.__setattr__(self, "target", y)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "lower_bounds", lb)
        object.__setattr__(self, "equalities", eqs)

    @property
    def eq_matrix(self) -> np.ndarray:
        H = self.design.shape[1]
        if not self.equalities:
            return np.zeros((0, H))
        return np.vstack([v for v, _ in self.equalities])

    @property
    def eq_rhs(self) -> np.ndarray:
        return np.array([s for _, s in self.equalities], dtype=float)


@dataclass(frozen=True)
class CLSResult:
    """Solution of a :class:`ConstrainedLeastSquares` problem.

    Attributes
    ----------
    x : np.ndarray
        A minimizer (possibly non-unique).
    fitted : np.ndarray
        ``design @ x`` (unique).
    objective : float
        Weighted squared residual ``sum_i w_i (D x - y)_i^2``.
    kkt : dict
        ``stationarity``, ``dual_feasibility``, ``complementarity`` and
        ``primal_feasibility`` residuals at ``x``.
    iterations : int
    """

    x: np.ndarray
    fitted: np.ndarray
    objective: float
    kkt: dict = field(default_factory=dict)
    iterations: int = 0

    @property
    def residual_norm_sq(self) -> float:
        return self.objective


def _null_space(E: np.ndarray) -> np.ndarray:
    if E.shape[0] == 0:
        return np.eye(E.shape[1])
    _, s, vt = np.linalg.svd(E, full_matrices=True)
    tol = 1e-12 * max(1.0, s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    return vt[rank:].T


def _multipliers(
    grad: np.ndarray, E: np.ndarray, free: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Equality multipliers from the free block, bound multipliers for all."""
    if E.shape[0] == 0:
        return np.zeros(0), grad.copy()
    basis = E[:, free] if free.any() else E
    target = grad[free] if free.any() else grad
    lam = np.linalg.lstsq(basis.T, target, rcond=None)[0]
    return lam, grad - E.T @ lam


def cls_solve(
    prob: ConstrainedLeastSquares,
    *,
    x0: Optional[np.ndarray] = None,
    max_iter: Optional[int] = None,
) -> CLSResult:
    """Solve a :class:`ConstrainedLeastSquares` problem.

    Parameters
    ----------
    prob : ConstrainedLeastSquares
    x0 : np.ndarray, optional
        A feasible starting point.  Defaults to the floors (no equalities) or
        an LP vertex of the feasible set.
    max_iter : int, optional
        Overrides the ``100 * I`` iteration cap.

    Returns
    -------
    CLSResult

    Raises
    ------
    InfeasibleConstraintsError
        If the floors and equalities admit no point.
    SolverError
        If the iteration cap is reached.
    """
    D, y, w, lb = prob.design, prob.target, prob.weights, prob.lower_bounds
    I, H = D.shape
    E = prob.eq_matrix
    f = prob.eq_rhs - E @ lb

    sw = np.sqrt(w)
    Dw = D * sw[:, None]
    yw = (y - D @ lb) * sw
    if max_iter is None:
        max_iter = 100 * max(I + E.shape[0], 1) + 2 * H

    # ---- feasible start ----------------------------------------------
    if x0 is not None:
        z = np.maximum(np.asarray(x0, dtype=float).ravel() - lb, 0.0)
        if E.shape[0] and np.abs(E @ z - f).max() > 1e-9 * max(1.0, np.abs(f).max()):
            raise DataValidationError("x0 violates the equality constraints")
    elif E.shape[0] == 0:
        z = np.zeros(H)
    else:
        start = feasible_point(E, f, ("=",) * E.shape[0])
        if start is None:
            raise InfeasibleConstraintsError(
                "floors and equality constraints admit no feasible point"
            )
        z = np.maximum(start, 0.0)
    free = z > 0

    # ---- active-set loop ---------------------------------------------
    iterations = 0
    while True:
        if iterations >= max_iter:
            raise SolverError(
                "active-set iteration cap reached",
                diagnostics={
                    "iterations": iterations,
                    "free_set_size": int(free.sum()),
                    "objective": float(np.sum((Dw @ z - yw) ** 2)),
                },
            )
        iterations += 1
        resid = Dw @ z - yw
        F = np.flatnonzero(free)

        step = np.zeros(F.size)
        if F.size:
            Z = _null_space(E[:, F])
            if Z.shape[1]:
                q = np.linalg.lstsq(Dw[:, F] @ Z, -resid, rcond=None)[0]
                step = Z @ q

        scale = 1.0 + (np.abs(z).max() if z.size else 0.0)
        if F.size == 0 or np.abs(step).max() <= _STEP_TOL * scale:
            grad = Dw.T @ resid
            _, mu = _multipliers(grad, E, free)
            bound = ~free
            if not bound.any():
                break
            candidates = np.where(bound, mu, np.inf)
            j = int(np.argmin(candidates))
            if candidates[j] >= -_KKT_TOL * (1.0 + np.abs(grad).max()):
                break
            free[j] = True
            logger.debug("active-set: releasing column %d (mu=%.3e)", j, candidates[j])
            continue

        zf = z[F]
        shrinking = step < 0
        if np.all(zf + step >= 0):
            z[F] = zf + step
        else:
            ratios = np.full(F.size, np.inf)
            ratios[shrinking] = -zf[shrinking] / step[shrinking]
            k = int(np.argmin(ratios))
            alpha = ratios[k]
            z[F] = zf + alpha * step
            z[F[k]] = 0.0
            free[F[k]] = False
        tiny = free & (z <= _STEP_TOL * scale)
        if tiny.any() and E.shape[0] == 0:
            z[tiny] = 0.0
            free[tiny] = False

    x = z + lb
    fitted = D @ x
    resid = Dw @ z - yw
    objective = float(resid @ resid)
    grad = Dw.T @ resid
    _, mu = _multipliers(grad, E, free)
    kkt = {
        "stationarity": float(np.abs(mu[free]).max()) if free.any() else 0.0,
        "dual_feasibility": float(max(0.0, -mu[~free].min())) if (~free).any() else 0.0,
        "complementarity": float(np.abs(z * mu).max()) if H else 0.0,
        "primal_feasibility": float(
            max(
                np.abs(E @ z - f).max() if E.shape[0] else 0.0,
                max(0.0, -z.min()) if H else 0.0,
            )
        ),
    }
    logger.debug(
        "CLS solved: objective=%.6g iterations=%d support=%d",
        objective, iterations, int(free.sum()),
    )
    return CLSResult(x=x, fitted=fitted, objective=objective, kkt=kkt, iterations=iterations)
