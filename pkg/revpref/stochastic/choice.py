"""
Stochastic Rationality Test
===========================

Normalized and discretized choice probabilities, the J_N statistic for
``H0: pi in cone(A)`` and its tightened bootstrap p-value.

Architectural notes:
    - Each household's bundle is scaled onto its period's budget plane and
      assigned to a patch; ``pi_hat`` stacks the per-budget patch frequencies
      in layout order.  Retained patch assignments are kept on the result so
      the bootstrap resamples households, not frequencies.
    - ``J_N = N min_{nu >= 0} (pi_hat - A nu)' Omega (pi_hat - A nu)`` is a
      :func:`~revpref.optimize.cls.cls_solve` projection with diagonal
      ``Omega``.  ``eta_hat = A nu_hat`` is unique even when ``nu_hat`` is not.
    - The bootstrap recenters resampled frequencies on the estimator
      restricted to the tightened cone ``{A nu : nu_j >= tau / H}``; each
      replication draws from its own ``(seed, STREAM_BOOTSTRAP, r)`` stream, so the p-value is
      identical for any thread count.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from revpref.config import BOUNDARY_TOL, DEFAULT_REPLICATIONS, DEFAULT_SEED
from revpref.errors import DataValidationError
from revpref.ingestion.dataset import StochasticDataset
from revpref.optimize.cls import ConstrainedLeastSquares, cls_solve
from revpref.stochastic.patches import PatchLayout, assign_patch, assign_patches
from revpref.stochastic.streams import STREAM_BOOTSTRAP, spawn_generator, thread_map
from revpref.stochastic.types_matrix import TypeMatrix

logger = logging.getLogger(__name__)

BOUNDARY_POLICIES = ("drop", "abort")

# J_N at or below this is reported as an exact fit.
JN_ZERO_TOL = 1e-10


@dataclass(frozen=True)
class ChoiceProbabilities:
    """Stacked patch frequencies ``pi_hat`` over all budgets.

    Attributes
    ----------
    stacked : np.ndarray, shape (I,)
    block_counts : tuple of int
        ``I_t`` per budget.
    sample_sizes : np.ndarray of int
        Retained ``N_t`` per budget.
    dropped_on_boundary : np.ndarray of int
    assignments : tuple of np.ndarray, optional
        Patch index of each retained household, per budget.
    """

    stacked: np.ndarray
    block_counts: tuple[int, ...]
    sample_sizes: np.ndarray
    dropped_on_boundary: np.ndarray = field(default=None)
    assignments: Optional[tuple[np.ndarray, ...]] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        pi = np.asarray(self.stacked, dtype=float).ravel()
        counts = tuple(int(c) for c in self.block_counts)
        if sum(counts) != pi.size:
            raise DataValidationError(
                f"block counts sum to {sum(counts)}, probability vector has {pi.size} entries"
            )
        sizes = np.asarray(self.sample_sizes, dtype=np.int64).ravel()
        if sizes.size != len(counts) or np.any(sizes < 1):
            raise DataValidationError("need a positive sample size per budget")
        dropped = (
            np.zeros(len(counts), dtype=np.int64)
            if self.dropped_on_boundary is None
            else np.asarray(self.dropped_on_boundary, dtype=np.int64).ravel()
        )
        object.__setattr__(self, "stacked", pi)
        object.__setattr__(self, "block_counts", counts)
        object.__setattr__(self, "sample_sizes", sizes)
        object.__setattr__(self, "dropped_on_boundary", dropped)
        for t in range(len(counts)):
            block = self.block(t)
            if np.any(block < -1e-12) or np.any(block > 1 + 1e-12) or abs(block.sum() - 1.0) > 1e-12:
                raise DataValidationError(f"budget {t}: block is not a probability vector")

    @property
    def block_offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.block_counts)[:-1]]).astype(int)

    @property
    def total_n(self) -> int:
        return int(self.sample_sizes.sum())

    @property
    def T(self) -> int:
        return len(self.block_counts)

    def block(self, t: int) -> np.ndarray:
        start = int(self.block_offsets[t])
        return self.stacked[start:start + self.block_counts[t]]

    def resample(self, rng: np.random.Generator) -> np.ndarray:
        """Frequencies from one within-period nonparametric resample."""
        if self.assignments is None:
            raise DataValidationError("household assignments are required to resample")
        out = np.empty_like(self.stacked)
        for t, (start, I_t) in enumerate(zip(self.block_offsets, self.block_counts)):
            assigned = self.assignments[t]
            n = assigned.size
            draw = assigned[rng.integers(0, n, size=n)]
            out[start:start + I_t] = np.bincount(draw, minlength=I_t) / n
        return out

    def to_dict(self) -> dict:
        return {
            "pi_hat": self.stacked.tolist(),
            "block_offsets": self.block_offsets.tolist(),
            "sample_sizes": self.sample_sizes.tolist(),
            "total_n": self.total_n,
            "dropped_on_boundary": self.dropped_on_boundary.tolist(),
        }


@dataclass(frozen=True)
class TestResult:
    """J_N statistic, projection and (optionally) bootstrap p-value."""

    __test__ = False  # not a pytest class

    jn: float
    nu_hat: np.ndarray
    eta_hat: np.ndarray
    n: int
    omega: str = "identity"
    p_value: Optional[float] = None
    replications: int = 0
    tau: Optional[float] = None
    seed: Optional[int] = None
    kkt: dict = field(default_factory=dict)
    bootstrap_stats: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def rationalizable(self) -> bool:
        return self.jn <= JN_ZERO_TOL

    def to_dict(self) -> dict:
        return {
            "jn": self.jn,
            "nu_hat": self.nu_hat.tolist(),
            "eta_hat": self.eta_hat.tolist(),
            "p_value": self.p_value,
            "replications": self.replications,
            "tau": self.tau,
            "omega": self.omega,
            "seed": self.seed,
            "n": self.n,
            "kkt": self.kkt,
        }


# ---------------------------------------------------------------------------
# Estimation
# ---------------------------------------------------------------------------


def estimate_pi(
    data: StochasticDataset,
    layout: PatchLayout,
    *,
    boundary: str = "drop",
    boundary_tol: float = BOUNDARY_TOL,
) -> ChoiceProbabilities:
    """Patch frequencies of the normalized choices.

    Parameters
    ----------
    boundary : {"drop", "abort"}
        ``"drop"`` discards choices on another budget plane and counts
        them; ``"abort"`` raises :class:`OnBoundaryError` on the first one.

    Raises
    ------
    DataValidationError
        If prices disagree with the layout or a period retains no choices.
    OnBoundaryError
        Under ``boundary="abort"``.
    """
    if boundary not in BOUNDARY_POLICIES:
        raise DataValidationError(f"boundary policy must be one of {BOUNDARY_POLICIES}")
    if data.prices.shape != layout.prices.shape or not np.allclose(
        data.prices, layout.prices, rtol=0.0, atol=1e-12
    ):
        raise DataValidationError("patch layout was built from different prices")

    blocks, sizes, dropped, kept = [], [], [], []
    for t in range(data.T):
        indices, on_boundary = assign_patches(data.choices[t], t, layout, boundary_tol=boundary_tol)
        if on_boundary.any():
            if boundary == "abort":
                first = int(np.flatnonzero(on_boundary)[0])
                assign_patch(data.choices[t][first], t, layout, boundary_tol=boundary_tol)
            logger.warning(
                "Period %s: dropped %d choice(s) on a budget boundary",
                data.period_ids[t], int(on_boundary.sum()),
            )
        retained = indices[~on_boundary]
        if retained.size == 0:
            raise DataValidationError(
                f"period {data.period_ids[t]} has no choices off the budget boundaries"
            )
        I_t = layout.counts[t]
        blocks.append(np.bincount(retained, minlength=I_t) / retained.size)
        sizes.append(retained.size)
        dropped.append(int(on_boundary.sum()))
        kept.append(retained)

    pi = ChoiceProbabilities(
        stacked=np.concatenate(blocks),
        block_counts=layout.counts,
        sample_sizes=np.array(sizes),
        dropped_on_boundary=np.array(dropped),
        assignments=tuple(kept),
    )
    logger.info(
        "Estimated pi_hat: I=%d, N=%d, dropped=%d", pi.stacked.size, pi.total_n, int(sum(dropped))
    )
    return pi


def omega_weights(omega: Optional[np.ndarray], size: int) -> np.ndarray:
    if omega is None:
        return np.ones(size)
    w = np.asarray(omega, dtype=float).ravel()
    if w.size != size:
        raise DataValidationError(f"Omega diagonal has {w.size} entries, expected {size}")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise DataValidationError("Omega diagonal must be strictly positive")
    return w


def check_dimensions(pi: ChoiceProbabilities, types: TypeMatrix) -> None:
    if pi.stacked.size != types.I or tuple(pi.block_counts) != tuple(types.layout.counts):
        raise DataValidationError(
            f"choice probabilities ({pi.stacked.size} rows) do not match the type matrix ({types.I} rows)"
        )


def compute_jn(
    pi: ChoiceProbabilities,
    types: TypeMatrix,
    omega: Optional[np.ndarray] = None,
    *,
    omega_label: Optional[str] = None,
) -> TestResult:
    """Project ``pi_hat`` onto ``cone(A)`` and return ``J_N``.

    Parameters
    ----------
    omega : np.ndarray, optional
        Positive diagonal of the weighting matrix.  Defaults to identity.

    Raises
    ------
    DataValidationError
        On dimension mismatch or invalid weights.
    SolverError
        If the active-set solver does not converge.
    """
    check_dimensions(pi, types)
    w = omega_weights(omega, types.I)
    A = types.matrix.astype(float)
    fit = cls_solve(ConstrainedLeastSquares(A, pi.stacked, w))
    n = pi.total_n
    jn = n * fit.objective
    logger.info("J_N = %.6g (N=%d, H=%d)", jn, n, types.H)
    return TestResult(
        jn=jn,
        nu_hat=fit.x,
        eta_hat=fit.fitted,
        n=n,
        omega=omega_label or ("identity" if omega is None else "diag"),
        kkt=fit.kkt,
    )


def default_tau(n: int) -> float:
    """``sqrt(log N / N)``."""
    if n < 2:
        raise DataValidationError("the default tuning parameter needs N >= 2")
    return math.sqrt(math.log(n) / n)


def validate_tau(tau: float) -> float:
    if not 0.0 < tau < 1.0:
        raise DataValidationError(f"tau must lie in (0, 1), got {tau}")
    return float(tau)


def bootstrap_pvalue(
    data: StochasticDataset,
    layout: PatchLayout,
    types: TypeMatrix,
    *,
    replications: int = DEFAULT_REPLICATIONS,
    tau: Optional[float] = None,
    omega: Optional[np.ndarray] = None,
    omega_label: Optional[str] = None,
    seed: int = DEFAULT_SEED,
    threads: int = 1,
    boundary: str = "drop",
    pi: Optional[ChoiceProbabilities] = None,
) -> TestResult:
    """J_N with a tightened-bootstrap p-value.

    The p-value is ``(1 + #{r : J*_r >= J_N}) / (R + 1)``; when ``J_N`` is
    zero the null is accepted without resampling and the p-value is 1.

    Raises
    ------
    DataValidationError
        On an invalid configuration (``R < 1``, ``tau`` outside (0, 1)).
    """
    if replications < 1:
        raise DataValidationError("replications must be >= 1")
    if pi is None:
        pi = estimate_pi(data, layout, boundary=boundary)
    base = compute_jn(pi, types, omega, omega_label=omega_label)
    n = pi.total_n
    tau = validate_tau(default_tau(n) if tau is None else tau)

    if base.jn <= JN_ZERO_TOL:
        logger.info("J_N is zero; null accepted without resampling")
        return TestResult(
            jn=base.jn, nu_hat=base.nu_hat, eta_hat=base.eta_hat, n=n, omega=base.omega,
            p_value=1.0, replications=replications, tau=tau, seed=seed, kkt=base.kkt,
        )

    w = omega_weights(omega, types.I)
    A = types.matrix.astype(float)
    floors = np.full(types.H, tau / types.H)
    eta_tau = cls_solve(ConstrainedLeastSquares(A, pi.stacked, w, floors)).fitted

    def replicate(r: int) -> float:
        rng = spawn_generator(seed, STREAM_BOOTSTRAP, r)
        recentered = pi.resample(rng) - pi.stacked + eta_tau
        return n * cls_solve(ConstrainedLeastSquares(A, recentered, w, floors)).objective

    stats = np.array(thread_map(replicate, range(replications), threads))
    p_value = float((1 + np.sum(stats >= base.jn)) / (replications + 1))
    logger.info(
        "Bootstrap: R=%d, tau=%.4g, p-value=%.4f", replications, tau, p_value
    )
    return TestResult(
        jn=base.jn, nu_hat=base.nu_hat, eta_hat=base.eta_hat, n=n, omega=base.omega,
        p_value=p_value, replications=replications, tau=tau, seed=seed, kkt=base.kkt,
        bootstrap_stats=stats,
    )
