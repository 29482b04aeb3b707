"""
Dataset Types
=============

Validated, immutable containers for the three kinds of observed data the
toolkit consumes:

    - :class:`DeterministicDataset`: one consumer observed at T price vectors.
    - :class:`StochasticDataset`: T cross-sections, each a price vector and
      the bundles chosen by N_t households.
    - :class:`CostMatrix`: observed costs ``psi^t(x^{t'})`` for nonlinear
      price systems.

Architectural notes:
    - Arrays are stored as float64 and copied on construction; the dataclasses
      are frozen so instances can be shared read-only across threads.
    - Validation errors are reported with 1-based row numbers that match the
      data rows of the wide/long CSV formats (header excluded).
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from revpref.errors import DataValidationError

logger = logging.getLogger(__name__)


def _as_matrix(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DataValidationError(f"{name} must be two-dimensional, got shape {arr.shape}")
    return arr


def _check_rows(prices: np.ndarray, bundles: np.ndarray) -> None:
    """Row-level checks shared by the deterministic and stochastic types."""
    for t in range(prices.shape[0]):
        if not np.all(np.isfinite(prices[t])) or not np.all(np.isfinite(bundles[t])):
            raise DataValidationError("non-finite value", row=t + 1)
        if np.any(prices[t] <= 0):
            raise DataValidationError("nonpositive price", row=t + 1)
        if np.any(bundles[t] < 0):
            raise DataValidationError("negative quantity", row=t + 1)
        if float(prices[t] @ bundles[t]) <= 0:
            raise DataValidationError("zero expenditure", row=t + 1)


@dataclass(frozen=True)
class DeterministicDataset:
    """T observations ``(p^t, x^t)`` of a single consumer.

    Parameters
    ----------
    prices : array-like, shape (T, L)
        Strictly positive price vectors.
    bundles : array-like, shape (T, L)
        Nonnegative bundles with positive expenditure at their own prices.
    labels : sequence of str, optional
        Per-observation identifiers (``label`` column of the wide format).

    Raises
    ------
    DataValidationError
        On dimension mismatch, nonpositive prices, negative quantities or
        zero expenditure.
    """

    prices: np.ndarray
    bundles: np.ndarray
    labels: Optional[tuple[str, ...]] = None

    def __post_init__(self) -> None:
        prices = _as_matrix(self.prices, "prices")
        bundles = _as_matrix(self.bundles, "bundles")
        if prices.shape != bundles.shape:
            raise DataValidationError(
                f"prices {prices.shape} and bundles {bundles.shape} differ in shape"
            )
        if prices.shape[0] < 1 or prices.shape[1] < 1:
            raise DataValidationError("dataset needs T >= 1 observations of L >= 1 goods")
        _check_rows(prices, bundles)
        labels = None
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != prices.shape[0]:
                raise DataValidationError(
                    f"{len(labels)} labels for {prices.shape[0]} observations"
                )
        prices.setflags(write=False)
        bundles.setflags(write=False)
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "bundles", bundles)
        object.__setattr__(self, "labels", labels)

    @property
    def T(self) -> int:
        return self.prices.shape[0]

    @property
    def L(self) -> int:
        return self.prices.shape[1]

    @property
    def expenditures(self) -> np.ndarray:
        """Own expenditures ``p^t . x^t``."""
        return np.einsum("tl,tl->t", self.prices, self.bundles)

    @property
    def cross_expenditures(self) -> np.ndarray:
        """``E[s, t] = p^s . x^t``."""
        return self.prices @ self.bundles.T

    def with_prices(self, prices: np.ndarray) -> "DeterministicDataset":
        return DeterministicDataset(prices, self.bundles, self.labels)

    def with_bundles(self, bundles: np.ndarray) -> "DeterministicDataset":
        return DeterministicDataset(self.prices, bundles, self.labels)

    def to_frame(self) -> pd.DataFrame:
        """Wide layout: optional ``label`` then ``p1..pL``, ``x1..xL``."""
        cols: dict[str, np.ndarray] = {}
        if self.labels is not None:
            cols["label"] = np.array(self.labels, dtype=object)
        for i in range(self.L):
            cols[f"p{i + 1}"] = self.prices[:, i]
        for i in range(self.L):
            cols[f"x{i + 1}"] = self.bundles[:, i]
        return pd.DataFrame(cols)


@dataclass(frozen=True)
class StochasticDataset:
    """T cross-sections: a price vector and N_t chosen bundles per period.

    Parameters
    ----------
    prices : array-like, shape (T, L)
    choices : sequence of arrays, each shape (N_t, L)
    period_ids : sequence of str, optional
        Keys used by the long CSV format.  Defaults to ``"1".."T"``.
    """

    prices: np.ndarray
    choices: tuple[np.ndarray, ...]
    period_ids: Optional[tuple[str, ...]] = None

    def __post_init__(self) -> None:
        prices = _as_matrix(self.prices, "prices")
        T, L = prices.shape
        if T < 1 or L < 1:
            raise DataValidationError("dataset needs T >= 1 periods of L >= 1 goods")
        if len(self.choices) != T:
            raise DataValidationError(f"{len(self.choices)} choice blocks for {T} periods")
        for t in range(T):
            if not np.all(np.isfinite(prices[t])) or np.any(prices[t] <= 0):
                raise DataValidationError(f"period {t + 1}: prices must be finite and positive")

        choices = []
        for t, block in enumerate(self.choices):
            arr = np.array(block, dtype=float)
            if arr.ndim == 1:
                arr = arr.reshape(-1, L) if arr.size else arr.reshape(0, L)
            if arr.shape[0] == 0:
                raise DataValidationError(f"period {t + 1} has no choices")
            if arr.ndim != 2 or arr.shape[1] != L:
                raise DataValidationError(
                    f"period {t + 1}: choices have shape {arr.shape}, expected (N, {L})"
                )
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise DataValidationError(f"period {t + 1}: quantities must be finite and nonnegative")
            if np.any(arr @ prices[t] <= 0):
                bad = int(np.flatnonzero(arr @ prices[t] <= 0)[0])
                raise DataValidationError(
                    f"period {t + 1}, household {bad + 1}: zero expenditure"
                )
            arr.setflags(write=False)
            choices.append(arr)

        ids = tuple(str(i + 1) for i in range(T)) if self.period_ids is None else tuple(
            str(s) for s in self.period_ids
        )
        if len(ids) != T or len(set(ids)) != T:
            raise DataValidationError("period ids must be unique, one per period")

        prices.setflags(write=False)
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "choices", tuple(choices))
        object.__setattr__(self, "period_ids", ids)

    @property
    def T(self) -> int:
        return self.prices.shape[0]

    @property
    def L(self) -> int:
        return self.prices.shape[1]

    @property
    def counts(self) -> np.ndarray:
        """N_t per period."""
        return np.array([c.shape[0] for c in self.choices], dtype=int)

    def to_frames(self) -> tuple[pd.DataFrame, pd.DataFrame]:
        """Long layout: ``(choices, prices)`` frames for the CSV writers."""
        rows = []
        for pid, block in zip(self.period_ids, self.choices):
            for h, x in enumerate(block):
                rows.append([pid, h + 1, *x])
        choice_cols = ["period", "household", *[f"x{i + 1}" for i in range(self.L)]]
        price_frame = pd.DataFrame(
            self.prices, columns=[f"p{i + 1}" for i in range(self.L)]
        )
        price_frame.insert(0, "period", list(self.period_ids))
        return pd.DataFrame(rows, columns=choice_cols), price_frame


@dataclass(frozen=True)
class CostMatrix:
    """Observed costs ``costs[t, t'] = psi^t(x^{t'})`` under T price systems.

    Raises
    ------
    DataValidationError
        If the matrix is not square, has negative entries, or a nonpositive
        diagonal.
    """

    costs: np.ndarray

    def __post_init__(self) -> None:
        C = np.array(self.costs, dtype=float)
        if C.ndim != 2 or C.shape[0] != C.shape[1] or C.shape[0] < 1:
            raise DataValidationError(f"cost matrix must be square, got shape {C.shape}")
        if not np.all(np.isfinite(C)) or np.any(C < 0):
            raise DataValidationError("costs must be finite and nonnegative")
        diag = np.diag(C)
        if np.any(diag <= 0):
            t = int(np.flatnonzero(diag <= 0)[0])
            raise DataValidationError("own cost must be positive", row=t + 1)
        C.setflags(write=False)
        object.__setattr__(self, "costs", C)

    @property
    def T(self) -> int:
        return self.costs.shape[0]
