"""
Revealed Preference Relations
=============================

Direct and transitively closed revealed-preference relations over bundles
(``x^s >=_x x^t``) and over prices (``p^s >=_p p^t``), the GARP and GAPP
checks built on them, expenditure normalization and the local robustness
margin of the GAPP test.

Architectural notes:
    - Every relation is a :class:`RelationPair` of boolean T x T matrices
      with ``weak[s, t]`` meaning "s is revealed (weakly) preferred to t".
      Bundle relations, linear price relations and cost-matrix price
      relations all reduce to one comparison of an expenditure matrix, so a
      single closure/cycle engine serves all three axioms.
    - The weak closure is a vectorized Floyd-Warshall pass that also records
      next-hop pointers.  The strict closure counts simple weak paths that
      cross a strict edge.  For relations without a violating cycle it
      equals the O(T^3) product ``W* S W*``; otherwise a search over
      tie-only prefixes refines that product.
    - A violation is a strict direct edge ``a -> b`` with ``b`` weakly
      reaching ``a``; the witness is that edge followed by the recorded path
      back, so every witness is a simple cycle of direct edges.
    - Comparisons use an absolute tolerance (``COMPARISON_TOL``).  Values
      within the tolerance of equality are weak-only, never strict.

Remark: with unbounded perturbations of prices and expenditure any data set
can be rationalized, so only the local margin below is computable.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from revpref.config import COMPARISON_TOL, SIMPLE_PATH_BUDGET
from revpref.errors import DataValidationError, GenericityError, SolverError
from revpref.ingestion.dataset import CostMatrix, DeterministicDataset

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RelationPair:
    """Boolean ``weak`` and ``strict`` relation matrices over T observations."""

    weak: np.ndarray
    strict: np.ndarray

    def __post_init__(self) -> None:
        weak = np.array(self.weak, dtype=bool)
        strict = np.array(self.strict, dtype=bool)
        if weak.ndim != 2 or weak.shape[0] != weak.shape[1] or weak.shape != strict.shape:
            raise DataValidationError("relation matrices must be square and of equal shape")
        if np.any(strict & ~weak):
            raise DataValidationError("strict relation must be contained in the weak relation")
        object.__setattr__(self, "weak", weak)
        object.__setattr__(self, "strict", strict)

    @property
    def size(self) -> int:
        return self.weak.shape[0]

    def to_dict(self) -> dict:
        return {"weak": self.weak.astype(int).tolist(), "strict": self.strict.astype(int).tolist()}


@dataclass(frozen=True)
class CycleWitness:
    """A cycle ``t_1 -> t_2 -> ... -> t_N -> t_1`` of direct weak edges.

    Edge ``k`` runs from ``sequence[k]`` to ``sequence[(k + 1) % N]``;
    edge ``strict_edge_at`` is strict.
    """

    sequence: tuple[int, ...]
    strict_edge_at: int = 0

    def edges(self) -> list[tuple[int, int]]:
        n = len(self.sequence)
        return [(self.sequence[k], self.sequence[(k + 1) % n]) for k in range(n)]

    def verify(self, direct: RelationPair) -> bool:
        """Re-check the cycle against the direct relation matrices."""
        if len(self.sequence) < 2 or len(set(self.sequence)) != len(self.sequence):
            return False
        edges = self.edges()
        if not all(direct.weak[a, b] for a, b in edges):
            return False
        a, b = edges[self.strict_edge_at]
        return bool(direct.strict[a, b])

    def to_dict(self) -> dict:
        return {"sequence": list(self.sequence), "strict_edge_at": self.strict_edge_at}


@dataclass(frozen=True)
class AxiomCheck:
    """Verdict of a GARP/GAPP check together with the relations it used."""

    axiom: str
    passes: bool
    witness: Optional[CycleWitness]
    direct: RelationPair
    closure: RelationPair

    def to_dict(self) -> dict:
        return {
            "axiom": self.axiom,
            "passes": self.passes,
            "witness": self.witness.to_dict() if self.witness else None,
        }


@dataclass(frozen=True)
class RobustnessMargin:
    """Terms of the local robustness condition of the GAPP test.

    A perturbation ``(delta, epsilon)`` of expenditure levels and prices
    leaves the GAPP verdict unchanged whenever
    ``2 max|delta| + 2 B max|epsilon| < min_gap``.
    """

    min_gap: float
    bundle_norm: float
    argmin_pair: Optional[tuple[int, int]] = None

    def admits(self, delta: np.ndarray, epsilon: np.ndarray) -> bool:
        delta = np.abs(np.asarray(delta, dtype=float))
        epsilon = np.abs(np.asarray(epsilon, dtype=float))
        lhs = 2.0 * (delta.max(initial=0.0)) + 2.0 * self.bundle_norm * epsilon.max(initial=0.0)
        return bool(lhs < self.min_gap)


# ---------------------------------------------------------------------------
# Direct relations
# ---------------------------------------------------------------------------


def _bundle_relations(cross: np.ndarray, tol: float) -> RelationPair:
    # cross[s, t] = p^s . x^t ; x^s >=_x x^t iff p^s x^s >= p^s x^t
    own = np.diag(cross)[:, None]
    weak = own >= cross - tol
    strict = own > cross + tol
    np.fill_diagonal(weak, True)
    np.fill_diagonal(strict, False)
    return RelationPair(weak, strict)


def _price_relations(cross: np.ndarray, tol: float) -> RelationPair:
    # cross[s, t] = cost of x^t under price system s ; p^s >=_p p^t iff cross[s, t] <= cross[t, t]
    own = np.diag(cross)[None, :]
    weak = cross <= own + tol
    strict = cross < own - tol
    np.fill_diagonal(weak, True)
    np.fill_diagonal(strict, False)
    return RelationPair(weak, strict)


def direct_bundle_relations(
    data: DeterministicDataset, tol: float = COMPARISON_TOL
) -> RelationPair:
    """``weak[s, t]`` iff ``x^s >=_x x^t``, i.e. ``p^s.x^s >= p^s.x^t``."""
    return _bundle_relations(data.cross_expenditures, tol)


def direct_price_relations(
    data: DeterministicDataset, tol: float = COMPARISON_TOL
) -> RelationPair:
    """``weak[s, t]`` iff ``p^s >=_p p^t``, i.e. ``p^s.x^t <= p^t.x^t``."""
    return _price_relations(data.cross_expenditures, tol)


def cost_matrix_from_prices(data: DeterministicDataset) -> CostMatrix:
    """Linear-pricing cost matrix, ``costs[t, t'] = p^t . x^{t'}``."""
    return CostMatrix(data.cross_expenditures)


# ---------------------------------------------------------------------------
# Closure and cycle search
# ---------------------------------------------------------------------------


def _weak_closure(weak: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reflexive-transitive closure with next-hop pointers.

    ``nxt[i, j]`` is the successor of ``i`` on a shortest (fewest-edge)
    path to ``j``, ``-1`` when unreachable.  Hop counts are tracked so the
    pointers always spell out simple paths.
    """
    T = weak.shape[0]
    hops = np.where(weak, 1.0, np.inf)
    np.fill_diagonal(hops, 0.0)
    nxt = np.where(np.isfinite(hops), np.arange(T)[None, :], -1)
    for k in range(T):
        via = hops[:, k][:, None] + hops[k, :][None, :]
        shorter = via < hops
        if shorter.any():
            nxt = np.where(shorter, nxt[:, k][:, None], nxt)
            hops = np.where(shorter, via, hops)
    return np.isfinite(hops), nxt


def _path(nxt: np.ndarray, i: int, j: int) -> list[int]:
    path = [i]
    while path[-1] != j:
        path.append(int(nxt[path[-1], j]))
        if len(path) > nxt.shape[0] + 1:
            raise SolverError("next-hop pointers do not form a path")
    return path


def _closure(direct: RelationPair) -> tuple[RelationPair, np.ndarray]:
    """Weak closure with pointers and the walk-based strict closure ``W* S W*``."""
    W, nxt = _weak_closure(direct.weak)
    Wi = W.astype(np.int64)
    S = (Wi @ direct.strict.astype(np.int64) @ Wi) > 0
    return RelationPair(W, S), nxt


def _simple_path_strict(direct: RelationPair, budget: int) -> Optional[np.ndarray]:
    """``strict[i, j]`` over simple paths, or ``None`` past ``budget`` expansions.

    A simple path crossing a strict edge is a tie-only prefix ``i -> a``,
    the first strict edge ``a -> b`` and any path from ``b`` avoiding the
    prefix.  Prefixes are enumerated depth-first over tie edges only; each
    suffix set is one breadth-first sweep from all strict successors.
    """
    T = direct.size
    off = ~np.eye(T, dtype=bool)
    weak = direct.weak & off
    strict = direct.strict & off
    tie = weak & ~strict
    out = np.zeros((T, T), dtype=bool)
    work = 0

    def sweep(sources: np.ndarray, blocked: np.ndarray) -> np.ndarray:
        seen = blocked | sources
        frontier = sources.copy()
        reached = sources.copy()
        while frontier.any():
            frontier = weak[frontier].any(axis=0) & ~seen
            seen |= frontier
            reached |= frontier
        return reached

    for i in range(T):
        visited = np.zeros(T, dtype=bool)
        visited[i] = True
        stack = [(i, iter(np.flatnonzero(tie[i])))]
        out[i] |= sweep(strict[i] & ~visited, visited)
        while stack:
            v, successors = stack[-1]
            w = next(successors, None)
            if w is None:
                stack.pop()
                visited[v] = v == i
                continue
            if visited[w]:
                continue
            work += 1
            if work > budget:
                return None
            visited[w] = True
            out[i] |= sweep(strict[w] & ~visited, visited)
            stack.append((w, iter(np.flatnonzero(tie[w]))))
    return out


def transitive_closure(
    direct: RelationPair, path_budget: int = SIMPLE_PATH_BUDGET
) -> RelationPair:
    """Close a direct relation.

    ``weak`` becomes the reflexive-transitive closure; ``strict[i, j]``
    holds iff some simple weak path from ``i`` to ``j`` (``i != j``) uses a
    strict edge, so the strict diagonal is always empty.

    Without a violating cycle every walk through a strict edge shortens to
    such a path and the O(T^3) product ``W* S W*`` is exact.  Otherwise the
    simple-path search runs; if it needs more than ``path_budget`` prefix
    expansions (many tied comparisons) the walk-based relation, a superset,
    is returned with a warning.
    """
    closed, _ = _closure(direct)
    return _refine(direct, closed, path_budget)


def _refine(direct: RelationPair, closed: RelationPair, path_budget: int) -> RelationPair:
    if not np.any(direct.strict & closed.weak.T):
        strict = closed.strict.copy()
        np.fill_diagonal(strict, False)
        return RelationPair(closed.weak, strict)
    exact = _simple_path_strict(direct, path_budget)
    if exact is None:
        logger.warning(
            "Simple-path closure exceeded %d expansions; strict relation counts walks", path_budget
        )
        return closed
    return RelationPair(closed.weak, exact)


def find_cycle(direct: RelationPair) -> tuple[RelationPair, Optional[CycleWitness]]:
    """Return the closure and a violating cycle, if any.

    A cycle is violating when it contains a strict edge, i.e. some strict
    edge ``a -> b`` has ``b`` weakly reaching ``a``.
    """
    walk, nxt = _closure(direct)
    closed = _refine(direct, walk, SIMPLE_PATH_BUDGET)
    bad = direct.strict & walk.weak.T
    np.fill_diagonal(bad, False)
    if not bad.any():
        return closed, None
    a, b = (int(v) for v in np.argwhere(bad)[0])
    back = _path(nxt, b, a)
    witness = CycleWitness(sequence=tuple([a] + back[:-1]), strict_edge_at=0)
    return closed, witness


def _check(axiom: str, direct: RelationPair) -> AxiomCheck:
    closed, witness = find_cycle(direct)
    if witness is not None:
        logger.debug("%s violated: cycle %s", axiom, list(witness.sequence))
    return AxiomCheck(axiom, witness is None, witness, direct, closed)


# ---------------------------------------------------------------------------
# Axioms
# ---------------------------------------------------------------------------


def check_garp(data: DeterministicDataset, tol: float = COMPARISON_TOL) -> AxiomCheck:
    """Generalized Axiom of Revealed Preference over bundles."""
    return _check("GARP", direct_bundle_relations(data, tol))


def check_gapp(data: DeterministicDataset, tol: float = COMPARISON_TOL) -> AxiomCheck:
    """Generalized Axiom of Price Preference under linear pricing."""
    return _check("GAPP", direct_price_relations(data, tol))


def check_gapp_nonlinear(costs: CostMatrix, tol: float = COMPARISON_TOL) -> AxiomCheck:
    """GAPP over general price systems.

    ``psi^{t'} >=_p psi^t`` iff ``costs[t', t] <= costs[t, t]``.  With
    ``costs = cost_matrix_from_prices(data)`` this is :func:`check_gapp`.
    """
    return _check("GAPP", _price_relations(np.asarray(costs.costs), tol))


def check_outside_good_garp(
    data: DeterministicDataset,
    outside_prices: Sequence[float],
    total_budgets: Sequence[float],
    tol: float = COMPARISON_TOL,
) -> AxiomCheck:
    """GARP on the data augmented with a composite outside good.

    The outside good is priced at ``q^t`` and absorbs the unspent part of
    an observed total budget ``M^t``: its quantity is ``(M^t - p^t.x^t) / q^t``.

    Raises
    ------
    DataValidationError
        If lengths disagree, a ``q^t`` is not positive, or ``M^t`` is below
        the observed expenditure.
    """
    q = np.asarray(outside_prices, dtype=float).ravel()
    M = np.asarray(total_budgets, dtype=float).ravel()
    if q.size != data.T or M.size != data.T:
        raise DataValidationError("need one outside price and one total budget per observation")
    if np.any(q <= 0):
        raise DataValidationError("outside-good prices must be positive", row=int(np.argmin(q)) + 1)
    shortfall = M - data.expenditures
    if np.any(shortfall < -tol):
        t = int(np.flatnonzero(shortfall < -tol)[0])
        raise DataValidationError("total budget below observed expenditure", row=t + 1)
    z = np.maximum(shortfall, 0.0) / q
    augmented = DeterministicDataset(
        np.column_stack([data.prices, q]), np.column_stack([data.bundles, z]), data.labels
    )
    return check_garp(augmented, tol)


def panel_pass_rates(panels: Iterable[DeterministicDataset]) -> dict[str, float]:
    """Fractions of single-consumer panels passing GARP, GAPP and both."""
    garp = gapp = both = n = 0
    for panel in panels:
        g = check_garp(panel).passes
        p = check_gapp(panel).passes
        garp += g
        gapp += p
        both += g and p
        n += 1
    if n == 0:
        return {"panels": 0, "garp": float("nan"), "gapp": float("nan"), "both": float("nan")}
    return {"panels": n, "garp": garp / n, "gapp": gapp / n, "both": both / n}


# ---------------------------------------------------------------------------
# Normalization and robustness
# ---------------------------------------------------------------------------


def normalize_expenditure(data: DeterministicDataset) -> DeterministicDataset:
    """Scale each bundle to unit expenditure, ``x^t / (p^t.x^t)``."""
    return data.with_bundles(data.bundles / data.expenditures[:, None])


def robustness_margin(
    data: DeterministicDataset, tol: float = COMPARISON_TOL
) -> RobustnessMargin:
    """Smallest gap ``|p^t.x^t - p^{t'}.x^t|`` and ``B = max_t sum_i |x_i^t|``.

    Raises
    ------
    GenericityError
        If some gap is zero within ``tol``.
    """
    E = data.cross_expenditures
    own = np.diag(E)
    gaps = np.abs(own[None, :] - E)  # gaps[t', t] = |p^t x^t - p^{t'} x^t|
    np.fill_diagonal(gaps, np.inf)
    bundle_norm = float(np.abs(data.bundles).sum(axis=1).max())
    if data.T == 1:
        return RobustnessMargin(float("inf"), bundle_norm, None)
    flat = int(np.argmin(gaps))
    t_prime, t = divmod(flat, data.T)
    min_gap = float(gaps[t_prime, t])
    if min_gap <= tol:
        raise GenericityError(
            "expenditure gap is zero; the robustness margin is undefined", pair=(t, t_prime)
        )
    return RobustnessMargin(min_gap, bundle_norm, (t, t_prime))
