"""
Synthetic Populations
=====================

Data generators with a known answer, used to validate the stochastic test
and the welfare intervals:

    - :func:`gen_mixture`: a population that is a mixture ``nu_star`` of the
      rational types of a :class:`TypeMatrix`.  Patch frequencies converge
      to ``A nu_star``.
    - :func:`gen_quasilinear`: households maximizing
      ``sum_i a_i log x_i - p.x`` with Cobb-Douglas weights ``a`` drawn once
      per household, observed at every period.  Each household panel obeys
      both GAPP and GARP.

Architectural notes:
    - Period ``t`` of a mixture draws from the stream
      ``(seed, STREAM_MIXTURE, t)``, so periods are independent and a fixed
      seed reproduces the dataset.
    - A household's normalized bundle is a random convex combination of its
      patch's witness and up to three points sampled from the same patch.
      Patches are convex, so the combination stays inside; it is checked to
      be at least ``interior_margin`` away from every other budget plane and
      replaced by the witness otherwise.
    - Normalized bundles are scaled by a log-normal expenditure so the
      output exercises the normalization step downstream.
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from revpref.errors import DataValidationError
from revpref.ingestion.dataset import DeterministicDataset, StochasticDataset
from revpref.stochastic.patches import Patch, PatchLayout, side_values
from revpref.stochastic.streams import STREAM_MIXTURE, STREAM_QUASILINEAR, spawn_generator
from revpref.stochastic.types_matrix import TypeMatrix

logger = logging.getLogger(__name__)

_POOL_CANDIDATES = 512
_MAX_PARTNERS = 3


# ---------------------------------------------------------------------------
# Mixtures of rational types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MixtureSpec:
    """Population drawn from a distribution over rational types.

    Attributes
    ----------
    types : TypeMatrix
    nu_star : np.ndarray, shape (H,)
        Mixture weights on the columns of ``types``.
    sample_sizes : sequence of int
        ``N_t`` per period.
    expenditure_mu, expenditure_sigma : float
        Log-normal parameters of the expenditure scaling.
    seed : int
    interior_margin : float
        Minimum ``|p'.x - 1|`` of a jittered point.
    """

    types: TypeMatrix
    nu_star: np.ndarray
    sample_sizes: Sequence[int]
    expenditure_mu: float = 0.0
    expenditure_sigma: float = 0.25
    seed: int = 0
    interior_margin: float = 1e-6

    def __post_init__(self) -> None:
        nu = np.asarray(self.nu_star, dtype=float).ravel()
        if nu.size != self.types.H:
            raise DataValidationError(f"nu_star has {nu.size} entries, expected {self.types.H}")
        if np.any(nu < 0) or abs(nu.sum() - 1.0) > 1e-12:
            raise DataValidationError("nu_star must be a probability vector")
        sizes = tuple(int(n) for n in self.sample_sizes)
        if len(sizes) != self.types.layout.T or min(sizes) < 1:
            raise DataValidationError("need a sample size N_t >= 1 for every period")
        if self.expenditure_sigma < 0:
            raise DataValidationError("expenditure_sigma must be nonnegative")
        object.__setattr__(self, "nu_star", nu)
        object.__setattr__(self, "sample_sizes", sizes)


def mixture_probabilities(types: TypeMatrix, nu_star: np.ndarray) -> np.ndarray:
    """Stacked patch probabilities ``A nu_star`` the mixture converges to."""
    return types.matrix.astype(float) @ np.asarray(nu_star, dtype=float)


def _patch_margins(points: np.ndarray, t: int, patch: Patch, layout: PatchLayout) -> np.ndarray:
    """Signed distance to the wrong side of each other plane; all > 0 inside."""
    values, _ = side_values(points, t, layout)
    if values.shape[1] == 0:
        return np.full(points.shape[0], np.inf)
    return (values * np.asarray(patch.signs)).min(axis=1)


def _patch_pool(
    rng: np.random.Generator, t: int, patch: Patch, layout: PatchLayout, margin: float
) -> np.ndarray:
    """Uniform plane points (``x = w / p``, ``w`` on the simplex) inside the patch."""
    p = layout.prices[t]
    candidates = rng.dirichlet(np.ones(p.size), size=_POOL_CANDIDATES) / p
    inside = _patch_margins(candidates, t, patch, layout) > margin
    return candidates[inside]


def _jitter(
    rng: np.random.Generator,
    n: int,
    t: int,
    patch: Patch,
    layout: PatchLayout,
    margin: float,
) -> np.ndarray:
    """``n`` normalized points in ``patch`` around its witness."""
    witness = patch.witness / float(layout.prices[t] @ patch.witness)
    pool = _patch_pool(rng, t, patch, layout, margin)
    if pool.shape[0] == 0:
        return np.tile(witness, (n, 1))
    k = rng.integers(0, _MAX_PARTNERS + 1, size=n)
    partners = pool[rng.integers(0, pool.shape[0], size=(n, _MAX_PARTNERS))]
    weights = rng.dirichlet(np.ones(_MAX_PARTNERS + 1), size=n)
    weights[:, 1:] *= np.arange(_MAX_PARTNERS)[None, :] < k[:, None]
    weights /= weights.sum(axis=1, keepdims=True)
    points = weights[:, :1] * witness + np.einsum("nk,nkl->nl", weights[:, 1:], partners)
    bad = _patch_margins(points, t, patch, layout) <= margin
    points[bad] = witness
    return points


def gen_mixture(spec: MixtureSpec) -> StochasticDataset:
    """Draw a cross-section per period from the type mixture ``spec.nu_star``.

    Each household draws a type ``j ~ nu_star`` and picks a point in the
    patch type ``j`` assigns to the period, scaled by a log-normal
    expenditure.

    Usage::

        spec = MixtureSpec(types, nu_star=np.full(types.H, 1 / types.H),
                           sample_sizes=[500] * types.layout.T, seed=7)
        data = gen_mixture(spec)
    """
    types = spec.types
    layout = types.layout
    blocks = []
    for t in range(layout.T):
        rng = spawn_generator(spec.seed, STREAM_MIXTURE, t)
        n = spec.sample_sizes[t]
        drawn = rng.choice(types.H, size=n, p=spec.nu_star)
        patch_idx = types.assignments[drawn, t]
        block = np.empty((n, layout.prices.shape[1]))
        for i, patch in enumerate(layout.per_budget[t]):
            rows = np.flatnonzero(patch_idx == i)
            if rows.size:
                block[rows] = _jitter(rng, rows.size, t, patch, layout, spec.interior_margin)
        spend = rng.lognormal(spec.expenditure_mu, spec.expenditure_sigma, size=n)
        blocks.append(block * spend[:, None])

    data = StochasticDataset(layout.prices, tuple(blocks))
    logger.info(
        "Simulated mixture: T=%d, H=%d, N=%d (seed=%d)",
        data.T, types.H, int(data.counts.sum()), spec.seed,
    )
    return data


# ---------------------------------------------------------------------------
# Quasilinear households
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuasilinearSpec:
    """Population of quasilinear Cobb-Douglas households.

    Prices of good ``i`` are log-uniform on ``price_range``; weights ``a``
    are Dirichlet with parameter ``concentration``.
    """

    L: int
    T: int
    households: int
    price_range: tuple[float, float] = (0.5, 2.0)
    concentration: float | Sequence[float] = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.L < 1 or self.T < 1 or self.households < 1:
            raise DataValidationError("L, T and households must be positive")
        lo, hi = self.price_range
        if not 0 < lo < hi:
            raise DataValidationError(f"price range must satisfy 0 < low < high, got {self.price_range}")
        alpha = np.broadcast_to(np.asarray(self.concentration, dtype=float), (self.L,))
        if np.any(alpha <= 0):
            raise DataValidationError("Dirichlet concentration must be positive")


@dataclass(frozen=True)
class QuasilinearSample:
    """Pooled cross-sections plus one deterministic panel per household."""

    data: StochasticDataset
    panel: list[DeterministicDataset]
    weights: np.ndarray


def quasilinear_demand(weights: np.ndarray, prices: np.ndarray) -> np.ndarray:
    """Maximizer of ``sum_i a_i log x_i - p.x``: ``x_i = a_i / p_i``.

    ``weights`` is (H, L) and ``prices`` (T, L); the result is (H, T, L).
    """
    return np.asarray(weights, dtype=float)[:, None, :] / np.asarray(prices, dtype=float)[None, :, :]


def gen_quasilinear(spec: QuasilinearSpec) -> QuasilinearSample:
    """Simulate quasilinear households facing common prices each period."""
    price_rng = spawn_generator(spec.seed, STREAM_QUASILINEAR, 0)
    pref_rng = spawn_generator(spec.seed, STREAM_QUASILINEAR, 1)
    lo, hi = spec.price_range
    prices = np.exp(price_rng.uniform(np.log(lo), np.log(hi), size=(spec.T, spec.L)))
    alpha = np.broadcast_to(np.asarray(spec.concentration, dtype=float), (spec.L,))
    weights = pref_rng.dirichlet(alpha, size=spec.households)
    # Dirichlet draws can underflow to exact zeros for small concentrations
    weights = np.maximum(weights, np.finfo(float).tiny)

    demand = quasilinear_demand(weights, prices)
    data = StochasticDataset(prices, tuple(demand[:, t, :] for t in range(spec.T)))
    panel = [DeterministicDataset(prices, demand[h]) for h in range(spec.households)]
    logger.info(
        "Simulated quasilinear population: T=%d, L=%d, households=%d (seed=%d)",
        spec.T, spec.L, spec.households, spec.seed,
    )
    return QuasilinearSample(data=data, panel=panel, weights=weights)
