"""
Counterfactual Welfare
======================

Bounds on the share of the population revealed better off at ``p^t`` than at
``p^{t'}``, the theta-restricted statistic ``J_N(theta)`` and confidence
intervals for ``theta = rho . nu`` by test inversion.

Architectural notes:
    - Bounds are two LPs over ``{nu >= 0 : A nu = pi}``.  When the data are
      not exactly rationalizable the caller passes the projection
      ``eta_hat`` as right-hand side.
    - ``J_N(theta)`` projects onto ``{A nu : nu in simplex, rho.nu = theta,
      nu >= floors}``; both equalities go to the active-set solver, which
      keeps them exact by working on their null space.
    - Tightening floors follow the restriction-dependent scheme: after the
      affine normalization of ``(rho, theta)`` to a unit-length range, mass
      ``tau`` is split between the index sets where ``rho`` attains its max,
      its min, and neither, in proportion to the distance of ``theta`` from
      the opposite endpoint.  Negative floors on the middle set are clamped
      at zero with a warning.
    - Grid points and replications draw from streams keyed by
      ``(seed, STREAM_INTERVAL, theta_index, r)``.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from revpref.config import (
    DEFAULT_ALPHA,
    DEFAULT_GRID_STEP,
    DEFAULT_REPLICATIONS,
    DEFAULT_SEED,
)
from revpref.errors import DataValidationError, InfeasibleConstraintsError, SolverError
from revpref.ingestion.dataset import StochasticDataset
from revpref.optimize.cls import ConstrainedLeastSquares, cls_solve
from revpref.optimize.lp import LinearProgram, LPStatus, lp_solve
from revpref.stochastic.choice import (
    JN_ZERO_TOL,
    ChoiceProbabilities,
    check_dimensions,
    default_tau,
    estimate_pi,
    omega_weights,
    validate_tau,
)
from revpref.stochastic.patches import PatchLayout
from revpref.stochastic.streams import STREAM_INTERVAL, spawn_generator, thread_map
from revpref.stochastic.types_matrix import IndicatorVector, TypeMatrix, type_indicator

logger = logging.getLogger(__name__)

_RHO_TIE_TOL = 1e-12


@dataclass(frozen=True)
class ThetaPartition:
    """Index sets where ``rho`` is at its max, its min, or strictly between.

    ``scale`` is ``theta_max - theta_min``; normalized values are
    ``theta_min + (value - theta_min) / scale``.
    """

    theta_max: float
    theta_min: float
    upper_set: tuple[int, ...]
    lower_set: tuple[int, ...]
    middle_set: tuple[int, ...]
    rho: np.ndarray = field(repr=False)

    @property
    def scale(self) -> float:
        return self.theta_max - self.theta_min

    @property
    def normalized(self) -> bool:
        return abs(self.scale - 1.0) > _RHO_TIE_TOL

    def normalize(self, value: float | np.ndarray) -> float | np.ndarray:
        return self.theta_min + (value - self.theta_min) / self.scale

    def denormalize(self, value: float | np.ndarray) -> float | np.ndarray:
        return self.theta_min + (value - self.theta_min) * self.scale

    def to_dict(self) -> dict:
        return {
            "theta_max": self.theta_max,
            "theta_min": self.theta_min,
            "upper_set": list(self.upper_set),
            "lower_set": list(self.lower_set),
            "middle_set": list(self.middle_set),
            "normalized": self.normalized,
        }


@dataclass(frozen=True)
class WelfareBounds:
    lower: float
    upper: float
    any_rationalization_upper: float
    pair: tuple[int, int]
    nu_at_lower: np.ndarray = field(repr=False)
    nu_at_upper: np.ndarray = field(repr=False)
    used_projection: bool = False

    def to_dict(self) -> dict:
        return {
            "pair": list(self.pair),
            "lower": self.lower,
            "upper": self.upper,
            "any_rationalization_upper": self.any_rationalization_upper,
            "nu_at_lower": self.nu_at_lower.tolist(),
            "nu_at_upper": self.nu_at_upper.tolist(),
            "used_projection": self.used_projection,
        }


@dataclass(frozen=True)
class ConfidenceInterval:
    """Accepted grid values of ``theta`` and their hull."""

    grid: np.ndarray
    accepted: np.ndarray
    alpha: float
    per_theta: list[dict]
    pair: Optional[tuple[int, int]] = None
    degenerate: bool = False

    @property
    def interval(self) -> Optional[tuple[float, float]]:
        if self.accepted.size == 0:
            return None
        return float(self.accepted.min()), float(self.accepted.max())

    @property
    def model_rejected(self) -> bool:
        return self.accepted.size == 0

    def to_dict(self) -> dict:
        return {
            "pair": list(self.pair) if self.pair else None,
            "alpha": self.alpha,
            "grid": self.grid.tolist(),
            "accepted": self.accepted.tolist(),
            "interval": list(self.interval) if self.interval else None,
            "model_rejected": self.model_rejected,
            "degenerate": self.degenerate,
            "per_theta": self.per_theta,
        }


# ---------------------------------------------------------------------------
# Welfare bounds
# ---------------------------------------------------------------------------


def _rho_values(rho: IndicatorVector | np.ndarray) -> np.ndarray:
    values = rho.rho if isinstance(rho, IndicatorVector) else rho
    return np.asarray(values, dtype=float).ravel()


def _extreme(A: np.ndarray, target: np.ndarray, rho: np.ndarray, maximize: bool):
    prob = LinearProgram(rho, A, ("=",) * A.shape[0], target, maximize=maximize)
    return lp_solve(prob)


def welfare_bounds(
    pi: ChoiceProbabilities,
    types: TypeMatrix,
    rho: IndicatorVector,
    *,
    projection: Optional[np.ndarray] = None,
) -> WelfareBounds:
    """Smallest and largest ``rho.nu`` over ``{nu >= 0 : A nu = pi}``.

    Parameters
    ----------
    projection : np.ndarray, optional
        ``eta_hat`` to use instead of ``pi_hat`` when ``J_N > 0``.

    Raises
    ------
    InfeasibleConstraintsError
        If ``A nu = pi`` has no nonnegative solution.
    """
    check_dimensions(pi, types)
    A = types.matrix.astype(float)
    values = _rho_values(rho)
    if values.size != types.H:
        raise DataValidationError(f"rho has {values.size} entries, expected {types.H}")
    target = pi.stacked if projection is None else np.asarray(projection, dtype=float).ravel()

    low = _extreme(A, target, values, maximize=False)
    if low.status is LPStatus.INFEASIBLE:
        raise InfeasibleConstraintsError(
            "choice probabilities are not in cone(A); pass the projection eta_hat"
        )
    high = _extreme(A, target, values, maximize=True)
    if not (low.is_optimal and high.is_optimal):
        raise SolverError(
            "welfare LP not optimal",
            diagnostics={"lower": low.status.value, "upper": high.status.value},
        )

    pair = rho.pair
    reverse = type_indicator(types, pair[1], pair[0]).rho.astype(float)
    rev = _extreme(A, target, reverse, maximize=False)
    any_upper = 1.0 - rev.objective if rev.is_optimal else 1.0

    lower = float(np.clip(low.objective, 0.0, 1.0))
    upper = float(np.clip(high.objective, lower, 1.0))
    bounds = WelfareBounds(
        lower=lower,
        upper=upper,
        any_rationalization_upper=float(max(upper, min(any_upper, 1.0))),
        pair=tuple(pair),
        nu_at_lower=low.x,
        nu_at_upper=high.x,
        used_projection=projection is not None,
    )
    logger.info(
        "Welfare bounds for %s: [%.4f, %.4f], any-rationalization upper %.4f",
        pair, bounds.lower, bounds.upper, bounds.any_rationalization_upper,
    )
    return bounds


def welfare_table(
    pi: ChoiceProbabilities,
    types: TypeMatrix,
    *,
    projection: Optional[np.ndarray] = None,
) -> pd.DataFrame:
    """Welfare bounds for every ordered pair of budgets."""
    T = types.layout.T
    records = []
    for t in range(T):
        for t_prime in range(T):
            if t == t_prime:
                continue
            b = welfare_bounds(pi, types, type_indicator(types, t, t_prime), projection=projection)
            records.append(
                {
                    "t": t,
                    "t_prime": t_prime,
                    "lower": b.lower,
                    "upper": b.upper,
                    "any_rationalization_upper": b.any_rationalization_upper,
                }
            )
    return pd.DataFrame.from_records(
        records, columns=["t", "t_prime", "lower", "upper", "any_rationalization_upper"]
    )


# ---------------------------------------------------------------------------
# Theta restriction and tightening
# ---------------------------------------------------------------------------


def theta_partition(rho: IndicatorVector | np.ndarray) -> ThetaPartition:
    """Split type indices by where ``rho`` attains its extremes.

    Raises
    ------
    DataValidationError
        If ``rho`` is empty or constant.
    """
    values = _rho_values(rho)
    if values.size == 0:
        raise DataValidationError("rho must have at least one entry")
    hi, lo = float(values.max()), float(values.min())
    if hi - lo <= _RHO_TIE_TOL:
        raise DataValidationError("rho is constant; theta is not a free parameter")
    upper = tuple(int(j) for j in np.flatnonzero(values >= hi - _RHO_TIE_TOL))
    lower = tuple(int(j) for j in np.flatnonzero(values <= lo + _RHO_TIE_TOL))
    middle = tuple(j for j in range(values.size) if j not in upper and j not in lower)
    return ThetaPartition(hi, lo, upper, lower, middle, values)


def _check_theta(part: ThetaPartition, theta: float) -> None:
    slack = 1e-12 * max(1.0, abs(part.theta_max), abs(part.theta_min))
    if not part.theta_min - slack <= theta <= part.theta_max + slack:
        raise DataValidationError(
            f"theta={theta} outside [{part.theta_min}, {part.theta_max}]"
        )


def tightened_lower_bounds(part: ThetaPartition, theta: float, tau: float) -> np.ndarray:
    """Per-type floors of the tightened restricted simplex.

    With ``(rho, theta)`` normalized so that ``theta_max = theta_min + 1``:

    - ``(theta_max - theta) tau / |H_ u H_0|`` on the min set ``H_``,
    - ``(theta - theta_min) tau / |Hbar u H_0|`` on the max set ``Hbar``,
    - the remainder of ``tau`` spread evenly over the middle set ``H_0``.

    Raises
    ------
    DataValidationError
        If ``theta`` is outside ``[theta_min, theta_max]`` or ``tau`` is not
        in (0, 1).
    """
    _check_theta(part, theta)
    validate_tau(tau)
    th = float(np.clip(part.normalize(theta), part.theta_min, part.theta_min + 1.0))
    hi = part.theta_min + 1.0
    lo = part.theta_min
    n_low, n_up, n_mid = len(part.lower_set), len(part.upper_set), len(part.middle_set)

    floors = np.zeros(part.rho.size)
    low_floor = (hi - th) * tau / (n_low + n_mid)
    up_floor = (th - lo) * tau / (n_up + n_mid)
    floors[list(part.lower_set)] = low_floor
    floors[list(part.upper_set)] = up_floor
    if n_mid:
        coef = 1.0 - (hi - th) * n_low / (n_low + n_mid) - (th - lo) * n_up / (n_up + n_mid)
        if coef < 0:
            logger.warning("Middle-set tightening coefficient %.3g < 0; clamped to 0", coef)
            coef = 0.0
        floors[list(part.middle_set)] = coef * tau / n_mid
    return floors


def _theta_problem(
    A: np.ndarray,
    target: np.ndarray,
    w: np.ndarray,
    rho: np.ndarray,
    theta: float,
    floors: Optional[np.ndarray],
) -> ConstrainedLeastSquares:
    H = A.shape[1]
    return ConstrainedLeastSquares(
        A, target, w, floors, equalities=((np.ones(H), 1.0), (rho, theta))
    )


def jn_theta(
    pi: ChoiceProbabilities,
    types: TypeMatrix,
    rho: IndicatorVector | np.ndarray,
    theta: float,
    omega: Optional[np.ndarray] = None,
    floors: Optional[np.ndarray] = None,
) -> float:
    """``N min (pi_hat - A nu)' Omega (pi_hat - A nu)`` over the restricted simplex.

    Raises
    ------
    InfeasibleConstraintsError
        If ``theta`` is incompatible with the floors.
    """
    check_dimensions(pi, types)
    values = _rho_values(rho)
    part = theta_partition(values)
    _check_theta(part, theta)
    A = types.matrix.astype(float)
    w = omega_weights(omega, types.I)
    fit = cls_solve(_theta_problem(A, pi.stacked, w, values, theta, floors))
    return pi.total_n * fit.objective


# ---------------------------------------------------------------------------
# Confidence interval
# ---------------------------------------------------------------------------


def theta_grid(theta_min: float, theta_max: float, step: float) -> np.ndarray:
    """Grid from ``theta_min`` to ``theta_max`` with both endpoints."""
    span = theta_max - theta_min
    n = int(np.floor(span / step + 1e-9))
    grid = theta_min + step * np.arange(n + 1)
    if theta_max - grid[-1] > 1e-9 * max(1.0, span):
        grid = np.append(grid, theta_max)
    return np.round(grid, 12)


def confidence_interval(
    data: StochasticDataset,
    layout: PatchLayout,
    types: TypeMatrix,
    rho: IndicatorVector | np.ndarray,
    *,
    alpha: float = DEFAULT_ALPHA,
    grid_step: float = DEFAULT_GRID_STEP,
    replications: int = DEFAULT_REPLICATIONS,
    tau: Optional[float] = None,
    omega: Optional[np.ndarray] = None,
    seed: int = DEFAULT_SEED,
    threads: int = 1,
    boundary: str = "drop",
    pi: Optional[ChoiceProbabilities] = None,
) -> ConfidenceInterval:
    """Invert the tightened-bootstrap test of ``rho.nu = theta`` over a grid.

    A grid value is accepted iff ``J_N(theta)`` does not exceed the
    ``1 - alpha`` empirical quantile of the bootstrap statistics.  An empty
    accepted set is a legal outcome meaning the model itself is rejected.
    """
    if not 0.0 < alpha <= 0.5:
        raise DataValidationError(f"alpha must lie in (0, 0.5], got {alpha}")
    if not 0.0 < grid_step <= 0.25:
        raise DataValidationError(f"grid step must lie in (0, 0.25], got {grid_step}")
    if replications < 1:
        raise DataValidationError("replications must be >= 1")
    if pi is None:
        pi = estimate_pi(data, layout, boundary=boundary)
    check_dimensions(pi, types)
    values = _rho_values(rho)
    pair = rho.pair if isinstance(rho, IndicatorVector) else None

    if values.size and values.max() - values.min() <= _RHO_TIE_TOL:
        theta0 = float(values[0])
        logger.warning("rho is constant; theta is identified as %.4g without testing", theta0)
        grid = np.array([theta0])
        return ConfidenceInterval(
            grid=grid, accepted=grid.copy(), alpha=alpha,
            per_theta=[{"theta": theta0, "jn": 0.0, "critical_value": 0.0, "accepted": True}],
            pair=pair, degenerate=True,
        )

    part = theta_partition(values)
    n = pi.total_n
    tau = validate_tau(default_tau(n) if tau is None else tau)
    A = types.matrix.astype(float)
    w = omega_weights(omega, types.I)
    grid = theta_grid(part.theta_min, part.theta_max, grid_step)

    per_theta: list[dict] = []
    accepted: list[float] = []
    for g, theta in enumerate(grid):
        record = {"theta": float(theta)}
        try:
            jn = n * cls_solve(_theta_problem(A, pi.stacked, w, values, theta, None)).objective
            floors = tightened_lower_bounds(part, theta, tau)
            problem = _theta_problem(A, pi.stacked, w, values, theta, floors)
            eta_tau = cls_solve(problem).fitted
        except InfeasibleConstraintsError as exc:
            logger.warning("theta=%.4g: restricted set infeasible (%s)", theta, exc)
            record.update({"jn": None, "critical_value": None, "accepted": False, "infeasible": True})
            per_theta.append(record)
            continue

        def replicate(r: int, g=g, theta=theta, floors=floors, eta_tau=eta_tau) -> float:
            rng = spawn_generator(seed, STREAM_INTERVAL, g, r)
            recentered = pi.resample(rng) - pi.stacked + eta_tau
            return n * cls_solve(_theta_problem(A, recentered, w, values, theta, floors)).objective

        stats = np.array(thread_map(replicate, range(replications), threads))
        crit = float(np.quantile(stats, 1.0 - alpha, method="inverted_cdf"))
        ok = bool(jn <= crit + JN_ZERO_TOL)
        record.update({"jn": float(jn), "critical_value": crit, "accepted": ok})
        per_theta.append(record)
        if ok:
            accepted.append(float(theta))

    ci = ConfidenceInterval(
        grid=grid, accepted=np.array(accepted), alpha=alpha, per_theta=per_theta, pair=pair
    )
    if ci.model_rejected:
        logger.warning("No theta accepted: the model is rejected at alpha=%.3g", alpha)
    else:
        logger.info("Confidence interval %s at alpha=%.3g (%d/%d accepted)",
                    ci.interval, alpha, len(accepted), grid.size)
    return ci
