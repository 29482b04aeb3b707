"""
Dataset Loader
==============

Reads observed price/quantity data from disk into the validated dataset
types, and writes them back in the same layouts.

Formats:
    - wide (deterministic): one row per observation, header
      ``[label,] p1..pL, x1..xL``.
    - long (stochastic): a choices file ``period, household, x1..xL`` and a
      companion prices file ``period, p1..pL`` with one row per period.

Architectural notes:
    - File-type detection is based on extension rather than content sniffing.
      ``.csv``/``.tsv`` go through pandas' CSV reader, ``.xlsx``/``.xls``
      through ``read_excel`` (first sheet).
    - Encoding fallback uses ``latin-1`` after ``utf-8`` fails.
    - Column names are normalized cosmetically (lowercase, strip, underscore)
      before the layout is checked, so ``" P1 "`` and ``p1`` are the same
      column.
    - Every cell is read as text and converted with ``pd.to_numeric``, so a
      malformed or missing value is reported with its 1-based data row
      instead of silently turning the column into ``object`` dtype.
    - Loading never reorders rows.  Stochastic periods follow the order of
      the prices file; choices keep their file order within a period.
"""

import logging
import re
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from revpref.errors import DataValidationError
from revpref.ingestion.dataset import DeterministicDataset, StochasticDataset

logger = logging.getLogger(__name__)

# Supported file extensions mapped to their canonical type name.
_EXTENSION_MAP: dict[str, str] = {
    ".csv": "csv",
    ".tsv": "csv",
    ".xls": "excel",
    ".xlsx": "excel",
}

_PRICE_COL = re.compile(r"^p(\d+)$")
_QTY_COL = re.compile(r"^x(\d+)$")


class DatasetLoader:
    """Read a raw table from disk with normalized column names.

    Usage::

        frame = DatasetLoader("data/raw/household_panel.csv").load()

    Parameters
    ----------
    file_path : str or Path
        Path to the data file.

    Raises
    ------
    FileNotFoundError
        If the file does not exist.
    """

    def __init__(self, file_path: str | Path) -> None:
        self.file_path: Path = Path(file_path).resolve()
        self.file_type: Optional[str] = None

        if not self.file_path.exists():
            raise FileNotFoundError(f"Data file not found: {self.file_path}")

    # ------------------------------------------------------------------
    # Public API
    # ------------------------------------------------------------------

    def load(self) -> pd.DataFrame:
        """Return the table as strings with normalized column names.

        Raises
        ------
        ValueError
            If the file extension is not supported.
        DataValidationError
            If the file cannot be parsed.
        """
        self.file_type = self._detect_file_type()
        reader = {"csv": self._load_csv, "excel": self._load_excel}[self.file_type]
        df = self._normalize_columns(reader())
        logger.info(
            "Loaded %s: rows=%d, columns=%d", self.file_path.name, len(df), len(df.columns)
        )
        return df

    # ------------------------------------------------------------------
    # Readers
    # ------------------------------------------------------------------

    def _detect_file_type(self) -> str:
        ext = self.file_path.suffix.lower()
        file_type = _EXTENSION_MAP.get(ext)
        if file_type is None:
            supported = ", ".join(sorted(_EXTENSION_MAP))
            raise ValueError(
                f"Unsupported file extension '{ext}'. Supported extensions: {supported}"
            )
        return file_type

    def _load_csv(self) -> pd.DataFrame:
        sep = "\t" if self.file_path.suffix.lower() == ".tsv" else ","
        for encoding in ("utf-8", "latin-1"):
            try:
                return pd.read_csv(
                    self.file_path,
                    sep=sep,
                    encoding=encoding,
                    dtype=str,
                    keep_default_na=False,
                    skipinitialspace=True,
                )
            except UnicodeDecodeError:
                logger.warning(
                    "Encoding '%s' failed for %s, trying next...", encoding, self.file_path.name
                )
            except pd.errors.ParserError as exc:
                raise DataValidationError(f"{self.file_path.name}: {exc}") from exc
        raise DataValidationError(f"{self.file_path.name}: no supported encoding")

    def _load_excel(self) -> pd.DataFrame:
        try:
            df = pd.read_excel(self.file_path, sheet_name=0, dtype=str)
        except Exception as exc:
            raise DataValidationError(f"Failed to read Excel file {self.file_path.name}") from exc
        return df.fillna("")

    @staticmethod
    def _normalize_columns(df: pd.DataFrame) -> pd.DataFrame:
        df.columns = [re.sub(r"\s+", "_", str(col).strip().lower()) for col in df.columns]
        return df


# ---------------------------------------------------------------------------
# Column helpers
# ---------------------------------------------------------------------------


def _indexed_columns(columns: list[str], pattern: re.Pattern, what: str) -> list[str]:
    """Columns matching ``pattern`` ordered by index, checked to be ``1..L``."""
    found = sorted(
        ((int(m.group(1)), c) for c in columns if (m := pattern.match(c))), key=lambda x: x[0]
    )
    indices = [i for i, _ in found]
    if indices != list(range(1, len(indices) + 1)):
        raise DataValidationError(f"{what} columns must be numbered 1..L, got {indices}")
    return [c for _, c in found]


def _numeric_block(df: pd.DataFrame, columns: list[str]) -> np.ndarray:
    """Convert ``columns`` to float64, naming the first bad row."""
    out = np.empty((len(df), len(columns)))
    for j, col in enumerate(columns):
        text = df[col].fillna("").astype(str).str.strip()
        values = pd.to_numeric(text.where(text != ""), errors="coerce")
        bad = np.flatnonzero(values.isna().to_numpy())
        if bad.size:
            raw = text.iloc[bad[0]]
            detail = "missing value" if raw == "" else f"cannot parse {raw!r}"
            raise DataValidationError(f"column {col}: {detail}", row=int(bad[0]) + 1)
        out[:, j] = values.to_numpy(dtype=float)
    return out


def _require(df: pd.DataFrame, column: str, source: Path) -> None:
    if column not in df.columns:
        raise DataValidationError(f"{source.name}: missing column '{column}'")


# ---------------------------------------------------------------------------
# Deterministic (wide) format
# ---------------------------------------------------------------------------


def load_deterministic(path: str | Path) -> DeterministicDataset:
    """Load a wide file of ``(p^t, x^t)`` observations.

    Parameters
    ----------
    path : str or Path
        ``.csv``, ``.tsv``, ``.xlsx`` or ``.xls`` file with header
        ``[label,] p1..pL, x1..xL``.

    Raises
    ------
    FileNotFoundError
        If the file does not exist.
    DataValidationError
        On a malformed header, an unparseable or missing value, a
        nonpositive price, a negative quantity or a zero-expenditure row.
    """
    loader = DatasetLoader(path)
    df = loader.load()
    if df.empty:
        raise DataValidationError(f"{loader.file_path.name}: no observations")
    price_cols = _indexed_columns(list(df.columns), _PRICE_COL, "price")
    qty_cols = _indexed_columns(list(df.columns), _QTY_COL, "quantity")
    if not price_cols or len(price_cols) != len(qty_cols):
        raise DataValidationError(
            f"{loader.file_path.name}: {len(price_cols)} price columns but "
            f"{len(qty_cols)} quantity columns"
        )
    prices = _numeric_block(df, price_cols)
    bundles = _numeric_block(df, qty_cols)
    labels = tuple(df["label"].astype(str)) if "label" in df.columns else None
    data = DeterministicDataset(prices, bundles, labels)
    logger.info("Deterministic dataset: T=%d, L=%d", data.T, data.L)
    return data


def _write_frame(frame: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix.lower() in (".xlsx", ".xls"):
        frame.to_excel(path, index=False, engine="openpyxl")
    else:
        sep = "\t" if path.suffix.lower() == ".tsv" else ","
        frame.to_csv(path, index=False, sep=sep, encoding="utf-8")
    return path


def write_deterministic(data: DeterministicDataset, path: str | Path) -> Path:
    """Write ``data`` in the wide layout (CSV, or Excel for ``.xlsx``)."""
    out = _write_frame(data.to_frame(), Path(path))
    logger.info("Wrote %d observations to %s", data.T, out)
    return out


# ---------------------------------------------------------------------------
# Stochastic (long) format
# ---------------------------------------------------------------------------


def load_prices(path: str | Path) -> tuple[tuple[str, ...], np.ndarray]:
    """Read a prices file ``period, p1..pL``.

    Returns
    -------
    period_ids : tuple of str
        In file order.
    prices : np.ndarray, shape (T, L)

    Raises
    ------
    DataValidationError
        On a missing ``period`` column, an empty or repeated period id, or an
        unparseable or nonpositive price.
    """
    loader = DatasetLoader(path)
    frame = loader.load()
    _require(frame, "period", loader.file_path)
    if frame.empty:
        raise DataValidationError(f"{loader.file_path.name}: no periods")
    price_cols = _indexed_columns(list(frame.columns), _PRICE_COL, "price")
    if not price_cols:
        raise DataValidationError(f"{loader.file_path.name}: no price columns")

    period_ids = [str(p).strip() for p in frame["period"].fillna("")]
    seen: set[str] = set()
    for i, pid in enumerate(period_ids):
        if pid == "" or pid in seen:
            raise DataValidationError(f"period id {pid!r} is empty or repeated", row=i + 1)
        seen.add(pid)
    prices = _numeric_block(frame, price_cols)
    bad = np.flatnonzero((prices <= 0).any(axis=1) | ~np.isfinite(prices).all(axis=1))
    if bad.size:
        raise DataValidationError("prices must be finite and positive", row=int(bad[0]) + 1)
    return tuple(period_ids), prices


def load_stochastic(choices_path: str | Path, prices_path: str | Path) -> StochasticDataset:
    """Load a long choices file and its companion prices file.

    Raises
    ------
    FileNotFoundError
        If either file does not exist.
    DataValidationError
        If a choice references a period absent from the prices file, a
        period has no choices, a period id repeats in the prices file, or the
        two files disagree on L.
    """
    choice_loader = DatasetLoader(choices_path)
    choices = choice_loader.load()
    period_ids, price_matrix = load_prices(prices_path)
    for col in ("period", "household"):
        _require(choices, col, choice_loader.file_path)

    qty_cols = _indexed_columns(list(choices.columns), _QTY_COL, "quantity")
    if not qty_cols or len(qty_cols) != price_matrix.shape[1]:
        raise DataValidationError(
            f"choices have {len(qty_cols)} goods but prices have {price_matrix.shape[1]}"
        )

    seen = set(period_ids)
    keys = choices["period"].fillna("").astype(str).str.strip()
    unknown = np.flatnonzero(~keys.isin(seen).to_numpy())
    if unknown.size:
        i = int(unknown[0])
        raise DataValidationError(
            f"period {keys.iloc[i]!r} not in prices file {Path(prices_path).name}",
            row=i + 1,
        )
    bundles = _numeric_block(choices, qty_cols)

    blocks = []
    for pid in period_ids:
        mask = (keys == pid).to_numpy()
        if not mask.any():
            raise DataValidationError(f"period {pid!r} has no choices")
        blocks.append(bundles[mask])

    data = StochasticDataset(price_matrix, tuple(blocks), tuple(period_ids))
    logger.info(
        "Stochastic dataset: T=%d, L=%d, N=%d (per period %s)",
        data.T, data.L, int(data.counts.sum()), data.counts.tolist(),
    )
    return data


def write_stochastic(
    data: StochasticDataset, choices_path: str | Path, prices_path: str | Path
) -> tuple[Path, Path]:
    """Write ``data`` as a long choices file plus a prices file."""
    choice_frame, price_frame = data.to_frames()
    c = _write_frame(choice_frame, Path(choices_path))
    p = _write_frame(price_frame, Path(prices_path))
    logger.info("Wrote %d choices over %d periods to %s", len(choice_frame), data.T, c)
    return c, p
