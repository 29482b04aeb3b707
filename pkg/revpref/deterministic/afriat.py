"""
Afriat Rationalization
======================

Constructive side of the deterministic tests: Afriat numbers for data that
pass GARP, the piecewise-linear envelope utility they define, and the
expenditure-augmented utility ``U(x, -e)`` that rationalizes any data set
passing GAPP.

Architectural notes:
    - Afriat numbers come from one LP: minimize ``sum(lambda)`` subject to
      ``phi^{t'} <= phi^t + lambda^t p^t.(x^{t'} - x^t)`` and
      ``lambda^t >= AFRIAT_LAMBDA_FLOOR``.  The constraints are homogeneous,
      so the floor only fixes the scale.  ``phi`` is shifted so that
      ``phi^0 = 0``.
    - The augmented utility solves Afriat on the (L+1)-good data set
      ``{((p^t, 1), (x^t, M - p^t.x^t))}`` with ``M = 2 max_t p^t.x^t``.
      The envelope is defined on all of R^(L+1), so ``M - e`` may be
      negative; beyond ``M`` a cubic penalty ``h(k) = k^3`` is subtracted.
    - Price-preference queries read the closed price relations directly;
      the indirect utility at observed prices equals ``phi^t`` of the
      augmented solution, which is what the ranking audit constrains.
"""

import enum
import itertools
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from revpref.config import AFRIAT_LAMBDA_FLOOR, COMPARISON_TOL
from revpref.deterministic.relations import check_gapp, check_garp
from revpref.errors import DataValidationError, RationalityViolationError, SolverError
from revpref.ingestion.dataset import DeterministicDataset
from revpref.optimize.lp import LinearProgram, lp_solve

logger = logging.getLogger(__name__)

_AFRIAT_RESIDUAL_TOL = 1e-9


class PricePreference(str, enum.Enum):
    STRICTLY_PREFERRED = "StrictlyPreferred"
    WEAKLY_PREFERRED = "WeaklyPreferred"
    UNRANKED = "Unranked"


@dataclass(frozen=True)
class AfriatSolution:
    """Utility levels ``phi`` and marginal utilities of income ``lam``."""

    phi: np.ndarray
    lam: np.ndarray

    def residuals(self, data: DeterministicDataset) -> np.ndarray:
        """``R[t, t'] = phi^{t'} - phi^t - lam^t p^t.(x^{t'} - x^t)``, zero diagonal."""
        E = data.cross_expenditures
        slope = E - np.diag(E)[:, None]
        R = self.phi[None, :] - self.phi[:, None] - self.lam[:, None] * slope
        np.fill_diagonal(R, 0.0)
        return R

    def max_residual(self, data: DeterministicDataset) -> float:
        return float(self.residuals(data).max())

    def to_dict(self) -> dict:
        return {"phi": self.phi.tolist(), "lambda": self.lam.tolist()}


def _afriat_program(
    data: DeterministicDataset,
    lambda_floor: float,
    extra_rows: Optional[list[tuple[np.ndarray, str, float]]] = None,
) -> LinearProgram:
    """Variables ``[phi_0..phi_{T-1}, lam_0..lam_{T-1}]``."""
    T = data.T
    E = data.cross_expenditures
    own = np.diag(E)
    pairs = [(s, t) for s in range(T) for t in range(T) if s != t]
    rows = np.zeros((len(pairs), 2 * T))
    for r, (s, t) in enumerate(pairs):
        rows[r, t] += 1.0
        rows[r, s] -= 1.0
        rows[r, T + s] = -(E[s, t] - own[s])
    senses = ["<="] * len(pairs)
    rhs = [0.0] * len(pairs)
    if extra_rows:
        rows = np.vstack([rows] + [r[0][None, :] for r in extra_rows])
        senses += [r[1] for r in extra_rows]
        rhs += [r[2] for r in extra_rows]
    bounds = np.vstack(
        [
            np.column_stack([np.full(T, -np.inf), np.full(T, np.inf)]),
            np.column_stack([np.full(T, lambda_floor), np.full(T, np.inf)]),
        ]
    )
    objective = np.concatenate([np.zeros(T), np.ones(T)])
    return LinearProgram(objective, rows.reshape(-1, 2 * T), tuple(senses), np.array(rhs), bounds)


def _settle_levels(phi: np.ndarray, lam: np.ndarray, data: DeterministicDataset) -> np.ndarray:
    """Lower LP levels until every inequality holds in floating point; ``phi[0] = 0``.

    One Bellman-Ford relaxation per round; the LP point is feasible up to
    round-off, so this moves ``phi`` by a few ulps at most.
    """
    E = data.cross_expenditures
    slope = lam[:, None] * (E - np.diag(E)[:, None])
    phi = phi - phi[0]
    for _ in range(data.T):
        reach = phi[:, None] + slope
        np.fill_diagonal(reach, np.inf)
        settled = np.minimum(phi, reach.min(axis=0))
        if np.array_equal(settled, phi):
            break
        phi = settled
    return phi - phi[0]


def solve_afriat(
    data: DeterministicDataset,
    *,
    lambda_floor: float = AFRIAT_LAMBDA_FLOOR,
    tol: float = COMPARISON_TOL,
) -> AfriatSolution:
    """Find Afriat numbers ``(phi, lambda)`` for a data set that passes GARP.

    Raises
    ------
    RationalityViolationError
        If the data violate GARP; carries the cycle witness.
    SolverError
        If the LP is infeasible although GARP holds.
    """
    garp = check_garp(data, tol)
    if not garp.passes:
        raise RationalityViolationError("GARP", garp.witness)

    result = lp_solve(_afriat_program(data, lambda_floor))
    if not result.is_optimal:
        raise SolverError(
            "Afriat LP not optimal on a GARP-consistent data set",
            diagnostics={"status": result.status.value, **result.diagnostics},
        )
    T = data.T
    lam = np.maximum(result.x[T:], lambda_floor)
    phi = _settle_levels(result.x[:T], lam, data)
    sol = AfriatSolution(phi=phi, lam=lam)

    worst = sol.max_residual(data)
    if worst > _AFRIAT_RESIDUAL_TOL * max(1.0, float(np.abs(phi).max(initial=0.0))):
        raise SolverError(
            "Afriat inequalities violated at the LP solution",
            diagnostics={"max_residual": worst},
        )
    logger.info("Afriat numbers found: T=%d, sum(lambda)=%.6g", T, float(lam.sum()))
    return sol


def evaluate_utility(
    sol: AfriatSolution, data: DeterministicDataset, x: np.ndarray
) -> float | np.ndarray:
    """Envelope utility ``min_t phi^t + lambda^t p^t.(x - x^t)``.

    ``x`` may be a single L-vector or a batch of shape (n, L); entries may be
    negative.
    """
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != data.L:
        raise DataValidationError(f"bundle has {X.shape[1]} goods, data has {data.L}")
    own = data.expenditures
    values = sol.phi[None, :] + sol.lam[None, :] * (X @ data.prices.T - own[None, :])
    out = values.min(axis=1)
    return float(out[0]) if single else out


# ---------------------------------------------------------------------------
# Augmented utility
# ---------------------------------------------------------------------------


def _augment(data: DeterministicDataset, M: float) -> DeterministicDataset:
    T = data.T
    return DeterministicDataset(
        np.column_stack([data.prices, np.ones(T)]),
        np.column_stack([data.bundles, M - data.expenditures]),
        data.labels,
    )


@dataclass(frozen=True)
class AugmentedUtility:
    """``U(x, -e) = U~(x, M - e) - h(max(0, e - M))`` with ``h(k) = k^p``.

    Attributes
    ----------
    base : AfriatSolution
        Afriat numbers of the augmented data set.
    augmented : DeterministicDataset
        The (L+1)-good data set ``{((p^t, 1), (x^t, M - p^t.x^t))}``.
    budget_constant : float
        ``M``.
    penalty_exponent : float
    source : DeterministicDataset
        The data the utility rationalizes.
    """

    base: AfriatSolution
    augmented: DeterministicDataset
    budget_constant: float
    source: DeterministicDataset
    penalty_exponent: float = 3.0

    def evaluate(self, x: np.ndarray, expenditure: float | np.ndarray) -> float | np.ndarray:
        """``U(x, -e)`` for one bundle or a batch with matching expenditures."""
        X = np.asarray(x, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        e = np.broadcast_to(np.asarray(expenditure, dtype=float), (X.shape[0],))
        z = self.budget_constant - e
        envelope = evaluate_utility(self.base, self.augmented, np.column_stack([X, z]))
        excess = np.maximum(0.0, e - self.budget_constant)
        out = np.atleast_1d(envelope) - excess ** self.penalty_exponent
        return float(out[0]) if single else out

    def at_prices(self, x: np.ndarray, prices: np.ndarray) -> float | np.ndarray:
        """``U(x, -p.x)``."""
        X = np.asarray(x, dtype=float)
        return self.evaluate(X, X @ np.asarray(prices, dtype=float))

    def indirect_utility(
        self, prices: np.ndarray, grid_radius: float, grid_points: int
    ) -> tuple[float, np.ndarray]:
        """Grid-restricted ``V(p) = max_x U(x, -p.x)`` over ``[0, r]^L``.

        Returns the value and the maximizing lattice point.
        """
        grid = _lattice(self.source.L, grid_radius, grid_points)
        values = self.at_prices(grid, prices)
        k = int(np.argmax(values))
        return float(values[k]), grid[k]

    def to_dict(self) -> dict:
        return {
            "budget_constant": self.budget_constant,
            "penalty_exponent": self.penalty_exponent,
            **self.base.to_dict(),
        }


def build_augmented_utility(
    data: DeterministicDataset, *, tol: float = COMPARISON_TOL
) -> AugmentedUtility:
    """Construct an augmented utility that rationalizes GAPP-consistent data.

    Raises
    ------
    RationalityViolationError
        If the data violate GAPP.
    SolverError
        If the augmented data set fails GARP (it cannot when GAPP holds).
    """
    gapp = check_gapp(data, tol)
    if not gapp.passes:
        raise RationalityViolationError("GAPP", gapp.witness)

    M = 2.0 * float(data.expenditures.max())
    augmented = _augment(data, M)
    garp = check_garp(augmented, tol)
    if not garp.passes:
        raise SolverError(
            "augmented data set violates GARP although GAPP holds",
            diagnostics={"cycle": list(garp.witness.sequence)},
        )
    base = solve_afriat(augmented, tol=tol)
    logger.info("Augmented utility built: T=%d, L=%d, M=%.6g", data.T, data.L, M)
    return AugmentedUtility(base=base, augmented=augmented, budget_constant=M, source=data)


def _lattice(L: int, radius: float, points: int) -> np.ndarray:
    if points < 1:
        raise DataValidationError("grid needs at least one point per axis")
    if radius < 0:
        raise DataValidationError("grid radius must be nonnegative")
    axis = np.linspace(0.0, radius, points)
    return np.array(list(itertools.product(axis, repeat=L)), dtype=float).reshape(-1, L)


@dataclass(frozen=True)
class RationalizationAudit:
    at_observed_bundles: bool
    on_grid: bool
    offending: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "at_observed_bundles": self.at_observed_bundles,
            "on_grid": self.on_grid,
            "offending": self.offending,
        }


def verify_rationalization(
    u: AugmentedUtility,
    data: DeterministicDataset,
    grid_radius: float,
    grid_points: int,
    *,
    tol: float = COMPARISON_TOL,
) -> RationalizationAudit:
    """Audit that each ``x^t`` maximizes ``U(x, -p^t.x)``.

    ``at_observed_bundles`` compares ``x^t`` against every observed bundle;
    ``on_grid`` additionally compares against a lattice of
    ``grid_points^L`` bundles in ``[0, grid_radius]^L``.  The first
    offending point (if any) is reported.
    """
    offending: Optional[dict] = None
    at_observed = True
    for t in range(data.T):
        p = data.prices[t]
        chosen = u.at_prices(data.bundles[t], p)
        rivals = u.at_prices(data.bundles, p)
        beaten = np.flatnonzero(rivals > chosen + tol)
        if beaten.size:
            at_observed = False
            s = int(beaten[0])
            offending = {"t": t, "bundle": data.bundles[s].tolist(), "margin": float(rivals[s] - chosen)}
            break

    on_grid = at_observed
    if at_observed:
        grid = _lattice(data.L, grid_radius, grid_points)
        for t in range(data.T):
            p = data.prices[t]
            chosen = u.at_prices(data.bundles[t], p)
            values = np.atleast_1d(u.at_prices(grid, p))
            k = int(np.argmax(values))
            if values[k] > chosen + tol:
                on_grid = False
                offending = {"t": t, "bundle": grid[k].tolist(), "margin": float(values[k] - chosen)}
                break
    if offending:
        logger.warning("Rationalization audit failed at observation %d", offending["t"])
    return RationalizationAudit(at_observed, on_grid, offending)


# ---------------------------------------------------------------------------
# Price-preference queries
# ---------------------------------------------------------------------------


def price_preference_query(
    data: DeterministicDataset, t: int, t_prime: int, *, tol: float = COMPARISON_TOL
) -> PricePreference:
    """Ranking of ``p^t`` against ``p^{t'}`` shared by every rationalization.

    Raises
    ------
    RationalityViolationError
        If the data violate GAPP.
    """
    for idx in (t, t_prime):
        if not 0 <= idx < data.T:
            raise DataValidationError(f"observation index {idx} out of range")
    gapp = check_gapp(data, tol)
    if not gapp.passes:
        raise RationalityViolationError("GAPP", gapp.witness)
    if gapp.closure.strict[t, t_prime]:
        return PricePreference.STRICTLY_PREFERRED
    if gapp.closure.weak[t, t_prime]:
        return PricePreference.WEAKLY_PREFERRED
    return PricePreference.UNRANKED


def rationalization_ranks_above(
    data: DeterministicDataset, better: int, worse: int, *, tol: float = COMPARISON_TOL
) -> bool:
    """Whether some augmented-utility rationalization has ``V(p^better) > V(p^worse)``.

    At observed prices ``V(p^t) = phi^t`` of the augmented Afriat numbers,
    so this is feasibility of the augmented Afriat LP with the extra row
    ``phi^better - phi^worse >= 1``.
    """
    gapp = check_gapp(data, tol)
    if not gapp.passes:
        raise RationalityViolationError("GAPP", gapp.witness)
    M = 2.0 * float(data.expenditures.max())
    augmented = _augment(data, M)
    row = np.zeros(2 * data.T)
    row[better] += 1.0
    row[worse] -= 1.0
    result = lp_solve(_afriat_program(augmented, AFRIAT_LAMBDA_FLOOR, [(row, ">=", 1.0)]))
    return result.is_optimal
