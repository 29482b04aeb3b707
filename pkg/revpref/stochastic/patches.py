"""
Budget Patches
==============

Partition of each normalized budget plane ``B^t = {x >= 0 : p^t.x = 1}``
into patches: the cells cut out by the other budget planes.  A patch is
identified by its sign vector, Below (``p^{t'}.x < 1``) or Above
(``p^{t'}.x > 1``) for every budget ``t'`` distinct from ``B^t``.

Architectural notes:
    - Cells are found by depth-first splitting over the other budgets in
      index order, Below before Above.  Each prefix is certified by the LP
      ``max s  s.t.  p^t.x = 1,  x_i >= s,  sign * (p^{t'}.x - 1) + s <= 0``;
      prefixes with optimal ``s <= SLACK_THRESHOLD`` are pruned.  Leaves are
      therefore emitted in lexicographic sign order, which is the canonical
      row order of choice probabilities and type matrices.
    - Budgets with identical price vectors form one duplicate class.  The
      class representative is enumerated once and members share its
      patches; members never appear in each other's sign vectors.
    - Proportional (non-identical) price vectors give parallel planes that
      do not intersect; each such plane contributes a constant sign.
"""

import enum
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from revpref.config import BOUNDARY_TOL, DUPLICATE_BUDGET_TOL, SLACK_THRESHOLD
from revpref.errors import DataValidationError, OnBoundaryError, SolverError
from revpref.optimize.lp import LinearProgram, lp_solve
from revpref.stochastic.streams import thread_map

logger = logging.getLogger(__name__)


class Side(enum.IntEnum):
    BELOW = -1
    ABOVE = 1


@dataclass(frozen=True)
class NormalizedBudget:
    """``B^t = {x >= 0 : prices.x = 1}``."""

    index: int
    prices: np.ndarray

    def contains(self, x: np.ndarray, tol: float = BOUNDARY_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= -tol) and abs(float(self.prices @ x) - 1.0) <= tol)


@dataclass(frozen=True)
class Patch:
    """One cell of budget ``budget_index``.

    ``signs[k]`` is the side of budget ``others[k]`` the cell lies on;
    ``witness`` is an interior point certified with margin ``slack``.
    """

    budget_index: int
    others: tuple[int, ...]
    signs: tuple[int, ...]
    witness: np.ndarray
    slack: float

    def side_of(self, other: int) -> Optional[Side]:
        """Side of budget ``other``, or ``None`` for the patch's own class."""
        try:
            return Side(self.signs[self.others.index(other)])
        except ValueError:
            return None

    def label(self) -> str:
        return "".join("B" if s < 0 else "A" for s in self.signs) or "-"

    def to_dict(self) -> dict:
        return {
            "budget": self.budget_index,
            "others": list(self.others),
            "signs": ["Below" if s < 0 else "Above" for s in self.signs],
            "witness": self.witness.tolist(),
            "slack": self.slack,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Patch":
        return cls(
            budget_index=int(d["budget"]),
            others=tuple(int(o) for o in d["others"]),
            signs=tuple(-1 if s == "Below" else 1 for s in d["signs"]),
            witness=np.asarray(d["witness"], dtype=float),
            slack=float(d["slack"]),
        )


@dataclass(frozen=True)
class PatchLayout:
    """Patches of every budget in canonical order.

    Attributes
    ----------
    prices : np.ndarray, shape (T, L)
    per_budget : tuple of tuple of Patch
    duplicate_classes : tuple of tuple of int
        Budgets grouped by identical price vectors, in first-index order.
    """

    prices: np.ndarray
    per_budget: tuple[tuple[Patch, ...], ...]
    duplicate_classes: tuple[tuple[int, ...], ...]
    _lookup: tuple[dict, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        prices = np.asarray(self.prices, dtype=float)
        object.__setattr__(self, "prices", prices)
        lookup = tuple({p.signs: i for i, p in enumerate(ps)} for ps in self.per_budget)
        object.__setattr__(self, "_lookup", lookup)

    @property
    def T(self) -> int:
        return len(self.per_budget)

    @property
    def counts(self) -> tuple[int, ...]:
        """``I_t`` per budget."""
        return tuple(len(ps) for ps in self.per_budget)

    @property
    def total_rows(self) -> int:
        return int(sum(self.counts))

    @property
    def offsets(self) -> np.ndarray:
        """Row offset of each budget's block in stacked vectors."""
        return np.concatenate([[0], np.cumsum(self.counts)[:-1]]).astype(int)

    def budget(self, t: int) -> NormalizedBudget:
        return NormalizedBudget(t, self.prices[t])

    def others(self, t: int) -> tuple[int, ...]:
        return _others(t, self.duplicate_classes, self.T)

    def class_of(self, t: int) -> tuple[int, ...]:
        return next(c for c in self.duplicate_classes if t in c)

    def index_of(self, t: int, signs: tuple[int, ...]) -> Optional[int]:
        return self._lookup[t].get(tuple(signs))

    def fingerprint(self) -> str:
        return ";".join(",".join(p.label() for p in ps) for ps in self.per_budget)

    def to_dict(self) -> dict:
        return {
            "prices": self.prices.tolist(),
            "counts": list(self.counts),
            "total_rows": self.total_rows,
            "duplicate_classes": [list(c) for c in self.duplicate_classes],
            "patches": [[p.to_dict() for p in ps] for ps in self.per_budget],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PatchLayout":
        return cls(
            prices=np.asarray(d["prices"], dtype=float),
            per_budget=tuple(tuple(Patch.from_dict(p) for p in ps) for ps in d["patches"]),
            duplicate_classes=tuple(tuple(int(t) for t in c) for c in d["duplicate_classes"]),
        )


def _others(t: int, classes: Sequence[tuple[int, ...]], T: int) -> tuple[int, ...]:
    own = next(c for c in classes if t in c)
    return tuple(s for s in range(T) if s not in own)


def duplicate_classes(prices: np.ndarray, tol: float = DUPLICATE_BUDGET_TOL) -> tuple[tuple[int, ...], ...]:
    """Group budgets whose price vectors coincide within ``tol``."""
    T = prices.shape[0]
    assigned = [-1] * T
    classes: list[list[int]] = []
    for t in range(T):
        if assigned[t] >= 0:
            continue
        members = [t]
        assigned[t] = len(classes)
        for s in range(t + 1, T):
            if assigned[s] < 0 and np.max(np.abs(prices[s] - prices[t])) <= tol:
                members.append(s)
                assigned[s] = len(classes)
        classes.append(members)
    return tuple(tuple(c) for c in classes)


def _max_slack(
    p: np.ndarray, others: np.ndarray, signs: Sequence[int]
) -> tuple[float, Optional[np.ndarray]]:
    """Solve the slack LP for a sign prefix; variables ``[x_1..x_L, s]``."""
    L = p.size
    k = len(signs)
    rows = [np.append(p, 0.0)]
    senses = ["="]
    rhs = [1.0]
    for i in range(L):
        row = np.zeros(L + 1)
        row[i], row[L] = 1.0, -1.0
        rows.append(row)
        senses.append(">=")
        rhs.append(0.0)
    for j in range(k):
        rows.append(np.append(signs[j] * others[j], 1.0))
        senses.append("<=")
        rhs.append(float(signs[j]))
    objective = np.zeros(L + 1)
    objective[L] = 1.0
    bounds = np.vstack([np.column_stack([np.zeros(L), np.full(L, np.inf)]), [[-np.inf, 1.0]]])
    result = lp_solve(
        LinearProgram(objective, np.vstack(rows), tuple(senses), np.array(rhs), bounds, maximize=True)
    )
    if not result.is_optimal:
        raise SolverError(
            "patch slack LP not optimal", diagnostics={"status": result.status.value}
        )
    return float(result.objective), result.x[:L]


def _budget_patches(
    t: int, prices: np.ndarray, others: tuple[int, ...], slack_threshold: float
) -> list[Patch]:
    p = prices[t]
    P = prices[list(others)] if others else np.zeros((0, prices.shape[1]))
    found: list[Patch] = []

    def descend(prefix: list[int]) -> None:
        slack, x = _max_slack(p, P, prefix)
        if slack <= slack_threshold:
            return
        if len(prefix) == len(others):
            found.append(Patch(t, others, tuple(prefix), x, slack))
            return
        for side in (Side.BELOW, Side.ABOVE):
            descend(prefix + [int(side)])

    descend([])
    return found


def enumerate_patches(
    prices: Sequence[Sequence[float]] | np.ndarray,
    *,
    slack_threshold: float = SLACK_THRESHOLD,
    duplicate_tol: float = DUPLICATE_BUDGET_TOL,
    threads: int = 1,
) -> PatchLayout:
    """Enumerate the patches of every normalized budget.

    Parameters
    ----------
    prices : array-like, shape (T, L)
        Strictly positive price vectors.
    slack_threshold : float
        Minimum certified slack for a cell to count as a patch.
    threads : int
        Budgets are enumerated in parallel when greater than one.

    Returns
    -------
    PatchLayout
    """
    P = np.array(prices, dtype=float)
    if P.ndim != 2 or P.shape[0] < 1 or P.shape[1] < 1:
        raise DataValidationError(f"prices must have shape (T, L), got {P.shape}")
    if not np.all(np.isfinite(P)) or np.any(P <= 0):
        raise DataValidationError("prices must be finite and strictly positive")

    classes = duplicate_classes(P, duplicate_tol)
    reps = [c[0] for c in classes]

    def run(rep: int) -> list[Patch]:
        return _budget_patches(rep, P, _others(rep, classes, P.shape[0]), slack_threshold)

    rep_patches = dict(zip(reps, thread_map(run, reps, threads)))

    per_budget: list[tuple[Patch, ...]] = []
    for t in range(P.shape[0]):
        cls = next(c for c in classes if t in c)
        source = rep_patches[cls[0]]
        per_budget.append(
            tuple(Patch(t, p.others, p.signs, p.witness, p.slack) for p in source)
        )
        if not source:
            raise SolverError(f"budget {t} has no patch", diagnostics={"budget": t})

    layout = PatchLayout(P, tuple(per_budget), classes)
    logger.info(
        "Patch layout: T=%d, duplicate classes=%d, rows=%d, counts=%s",
        layout.T, len(classes), layout.total_rows, list(layout.counts),
    )
    return layout


# ---------------------------------------------------------------------------
# Assignment
# ---------------------------------------------------------------------------


def side_values(bundles: np.ndarray, t: int, layout: PatchLayout) -> tuple[np.ndarray, tuple[int, ...]]:
    """``p^{t'}.x_n - 1`` for normalized ``x_n`` on budget ``t`` and every other budget."""
    X = np.atleast_2d(np.asarray(bundles, dtype=float))
    spend = X @ layout.prices[t]
    if np.any(spend <= 0):
        raise DataValidationError(f"bundle with zero expenditure at budget {t}")
    Xn = X / spend[:, None]
    others = layout.others(t)
    if not others:
        return np.zeros((X.shape[0], 0)), others
    return Xn @ layout.prices[list(others)].T - 1.0, others


def assign_patch(
    bundle: np.ndarray,
    t: int,
    layout: PatchLayout,
    *,
    boundary_tol: float = BOUNDARY_TOL,
) -> int:
    """Index of the patch of budget ``t`` containing the normalized bundle.

    Raises
    ------
    OnBoundaryError
        If the normalized bundle lies within ``boundary_tol`` of another
        budget plane.
    SolverError
        If no patch carries the computed sign vector.
    """
    values, others = side_values(bundle, t, layout)
    v = values[0]
    near = np.flatnonzero(np.abs(v) <= boundary_tol)
    if near.size:
        k = int(near[0])
        raise OnBoundaryError(t, others[k], float(abs(v[k])))
    signs = tuple(-1 if val < 0 else 1 for val in v)
    idx = layout.index_of(t, signs)
    if idx is None:
        raise SolverError(
            "no matching patch", diagnostics={"budget": t, "signs": list(signs)}
        )
    return idx


def assign_patches(
    bundles: np.ndarray,
    t: int,
    layout: PatchLayout,
    *,
    boundary_tol: float = BOUNDARY_TOL,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`assign_patch`.

    Returns
    -------
    indices : np.ndarray of int
        Patch index per bundle, ``-1`` for boundary bundles.
    on_boundary : np.ndarray of bool
    """
    values, _ = side_values(bundles, t, layout)
    on_boundary = (np.abs(values) <= boundary_tol).any(axis=1)
    signs = np.where(values < 0, -1, 1)
    indices = np.full(values.shape[0], -1, dtype=int)
    for n in np.flatnonzero(~on_boundary):
        idx = layout.index_of(t, tuple(int(s) for s in signs[n]))
        if idx is None:
            raise SolverError(
                "no matching patch",
                diagnostics={"budget": t, "signs": signs[n].tolist()},
            )
        indices[n] = idx
    return indices, on_boundary
