"""
Rational Types
==============

Enumerates the rational types over a :class:`PatchLayout`: assignments of
one patch per budget whose implied revealed-preference digraph satisfies
GARP.  Each type is a column of the binary matrix ``A`` (one 1 per budget
block), and per-type price-preference indicators feed the welfare bounds.

Architectural notes:
    - The relation implied by an assignment: budget ``s`` is revealed
      (strictly) preferred to budget ``t`` iff the patch chosen on ``t``
      lies Below ``s``.  Budgets of one duplicate class are weakly related
      both ways and never strictly.
    - Depth-first search over budgets in index order, patches in canonical
      order, so columns come out in lexicographic assignment order.  The
      weak reachability matrix is extended incrementally as each budget is
      placed and a prefix is pruned as soon as some strict edge ``a -> b``
      has ``b`` reaching ``a``.  Extensions of a violating prefix violate
      too, so pruning is exact.
    - With ``threads > 1`` the top-level branches run on a thread pool and
      are concatenated in branch order; output does not depend on the
      worker count.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from revpref.config import TYPE_CAP
from revpref.errors import DataValidationError, TypeBudgetExceededError
from revpref.stochastic.patches import PatchLayout
from revpref.stochastic.streams import thread_map

logger = logging.getLogger(__name__)


def _below_tables(layout: PatchLayout) -> list[np.ndarray]:
    """``below[t][i, s]``: patch ``i`` of budget ``t`` lies Below budget ``s``."""
    T = layout.T
    tables = []
    for t, patches in enumerate(layout.per_budget):
        tab = np.zeros((len(patches), T), dtype=bool)
        for i, patch in enumerate(patches):
            for s, sign in zip(patch.others, patch.signs):
                tab[i, s] = sign < 0
        tables.append(tab)
    return tables


def _class_matrix(layout: PatchLayout) -> np.ndarray:
    same = np.zeros((layout.T, layout.T), dtype=bool)
    for c in layout.duplicate_classes:
        idx = np.array(c)
        same[np.ix_(idx, idx)] = True
    np.fill_diagonal(same, False)
    return same


@dataclass(frozen=True)
class TypeMatrix:
    """Binary ``I x H`` matrix of rational types.

    Attributes
    ----------
    assignments : np.ndarray, shape (H, T)
        Patch index chosen on each budget, one row per type, in
        lexicographic order.
    layout : PatchLayout
        The generating layout.
    layout_ref : str
        Fingerprint of the layout's sign vectors.
    """

    assignments: np.ndarray
    layout: PatchLayout = field(repr=False)
    layout_ref: str = ""
    _matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        a = np.asarray(self.assignments, dtype=np.int64).reshape(-1, self.layout.T)
        object.__setattr__(self, "assignments", a)
        if not self.layout_ref:
            object.__setattr__(self, "layout_ref", self.layout.fingerprint())
        A = np.zeros((self.layout.total_rows, a.shape[0]), dtype=np.uint8)
        offsets = self.layout.offsets
        cols = np.arange(a.shape[0])
        for t in range(self.layout.T):
            A[offsets[t] + a[:, t], cols] = 1
        A.setflags(write=False)
        object.__setattr__(self, "_matrix", A)

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def H(self) -> int:
        return self.assignments.shape[0]

    @property
    def I(self) -> int:
        return self._matrix.shape[0]

    def column_relations(self) -> np.ndarray:
        """Closed weak relation per type, shape (H, T, T)."""
        T = self.layout.T
        below = _below_tables(self.layout)
        W = np.zeros((self.H, T, T), dtype=bool)
        for t in range(T):
            # edge s -> t where the patch on t lies Below s
            W[:, :, t] = below[t][self.assignments[:, t]]
        W |= _class_matrix(self.layout)[None, :, :]
        W[:, np.arange(T), np.arange(T)] = True
        for k in range(T):
            W |= W[:, :, k, None] & W[:, None, k, :]
        return W

    def to_dict(self, include_matrix: bool = False) -> dict:
        out = {
            "H": self.H,
            "I": self.I,
            "layout_ref": self.layout_ref,
            "assignments": self.assignments.tolist(),
        }
        if include_matrix:
            out["matrix"] = self._matrix.tolist()
        return out

    @classmethod
    def from_dict(cls, d: dict, layout: PatchLayout) -> "TypeMatrix":
        ref = layout.fingerprint()
        if d.get("layout_ref") and d["layout_ref"] != ref:
            raise DataValidationError("type matrix was built for a different patch layout")
        return cls(np.asarray(d["assignments"], dtype=np.int64).reshape(-1, layout.T), layout, ref)


@dataclass(frozen=True)
class IndicatorVector:
    """``rho[j] = 1`` iff type ``j`` reveals ``p^t`` weakly preferred to ``p^{t'}``."""

    rho: np.ndarray
    pair: tuple[int, int]

    def to_dict(self) -> dict:
        return {"pair": list(self.pair), "rho": self.rho.astype(int).tolist()}


class _Search:
    """Depth-first type search with incremental reachability."""

    def __init__(self, layout: PatchLayout, cap: int) -> None:
        self.T = layout.T
        self.counts = layout.counts
        self.below = _below_tables(layout)
        self.same = _class_matrix(layout)
        self.cap = cap
        self.prefixes = 0
        self.found: list[tuple[int, ...]] = []

    def run(self, first: Optional[int] = None) -> list[tuple[int, ...]]:
        T = self.T
        R = np.zeros((T, T), dtype=bool)
        S = np.zeros((T, T), dtype=bool)
        choices = range(self.counts[0]) if first is None else [first]
        for i in choices:
            self._place(0, i, [], R, S)
        return self.found

    def _place(self, k: int, i: int, prefix: list[int], R: np.ndarray, S: np.ndarray) -> None:
        self.prefixes += 1
        placed = np.arange(k)
        R = R.copy()
        S = S.copy()
        # edges between budget k (patch i) and the placed budgets
        into_k = self.below[k][i, :k] | self.same[:k, k]
        out_k = np.array([self.below[s][prefix[s], k] for s in range(k)], dtype=bool)
        out_k |= self.same[k, :k]
        S[:k, k] = self.below[k][i, :k]
        S[k, :k] = out_k & ~self.same[k, :k]

        R[k, k] = True
        reach_in = R[:k, :k][:, into_k].any(axis=1) if k else np.zeros(0, dtype=bool)
        reach_out = R[:k, :k][out_k, :].any(axis=0) if k else np.zeros(0, dtype=bool)
        R[placed, k] = reach_in
        R[k, placed] = reach_out
        R[np.ix_(placed, placed)] |= np.outer(reach_in, reach_out)
        n = k + 1
        if np.any(S[:n, :n] & R[:n, :n].T):
            return

        prefix = prefix + [i]
        if n == self.T:
            self.found.append(tuple(prefix))
            if len(self.found) > self.cap:
                raise TypeBudgetExceededError(self.cap, self.prefixes)
            return
        for j in range(self.counts[n]):
            self._place(n, j, prefix, R, S)


def enumerate_types(
    layout: PatchLayout, *, cap: int = TYPE_CAP, threads: int = 1
) -> TypeMatrix:
    """Enumerate every GARP-consistent patch assignment.

    Raises
    ------
    TypeBudgetExceededError
        If more than ``cap`` types exist.
    """
    if threads > 1 and layout.counts[0] > 1:
        def branch(i: int) -> tuple[list[tuple[int, ...]], int]:
            search = _Search(layout, cap)
            cols = search.run(first=i)
            return cols, search.prefixes

        results = thread_map(branch, range(layout.counts[0]), threads)
        columns = [c for cols, _ in results for c in cols]
        prefixes = sum(n for _, n in results)
        if len(columns) > cap:
            raise TypeBudgetExceededError(cap, prefixes)
    else:
        search = _Search(layout, cap)
        columns = search.run()
        prefixes = search.prefixes

    assignments = np.array(columns, dtype=np.int64).reshape(-1, layout.T)
    types = TypeMatrix(assignments, layout)
    logger.info(
        "Rational types: H=%d over I=%d rows (%d prefixes visited)",
        types.H, types.I, prefixes,
    )
    return types


def type_indicator(types: TypeMatrix, t: int, t_prime: int) -> IndicatorVector:
    """Per-type indicator of ``p^t >=*_p p^{t'}``.

    Budgets in one duplicate class carry no cross-budget information, so
    their indicator is all zeros.
    """
    T = types.layout.T
    if t == t_prime:
        raise DataValidationError("indicator needs two distinct budgets")
    if not (0 <= t < T and 0 <= t_prime < T):
        raise DataValidationError(f"budget pair ({t}, {t_prime}) out of range")
    if t_prime in types.layout.class_of(t):
        return IndicatorVector(np.zeros(types.H, dtype=np.int64), (t, t_prime))
    W = types.column_relations()
    return IndicatorVector(W[:, t, t_prime].astype(np.int64), (t, t_prime))
