"""
Artifact Registry
=================

Disk cache of the expensive enumeration artifacts, patch layouts and type
matrices, so the ``test``, ``welfare`` and ``ci`` commands can reuse the work
done by ``patches`` and ``types``.

Architectural notes:
    - Each artifact is one JSON file under the cache directory, named by a
      SHA-256 digest of the price matrix (and, for type matrices, the type
      cap).  A small ``registry.json`` index records what was stored and
      when.
    - A corrupt or unreadable artifact is logged and treated as a miss; the
      caller recomputes and overwrites it.
    - Concurrency is NOT handled; this module assumes one writer at a time.
"""

import hashlib
import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional

import numpy as np

from revpref.config import CACHE_DIR
from revpref.errors import DataValidationError
from revpref.stochastic.patches import PatchLayout
from revpref.stochastic.types_matrix import TypeMatrix

logger = logging.getLogger(__name__)


def prices_digest(prices: np.ndarray) -> str:
    """SHA-256 of the shape and little-endian float64 bytes of ``prices``."""
    arr = np.ascontiguousarray(prices, dtype="<f8")
    h = hashlib.sha256()
    h.update(repr(arr.shape).encode("ascii"))
    h.update(arr.tobytes())
    return h.hexdigest()


class ArtifactRegistry:
    """JSON cache of :class:`PatchLayout` and :class:`TypeMatrix` objects.

    Usage::

        registry = ArtifactRegistry()
        layout = registry.get_layout(prices)
        if layout is None:
            layout = enumerate_patches(prices)
            registry.put_layout(layout)

    Parameters
    ----------
    cache_dir : Path, optional
        Override the default cache location (useful for testing).
    """

    def __init__(self, cache_dir: Optional[Path] = None) -> None:
        self._dir: Path = Path(cache_dir) if cache_dir is not None else CACHE_DIR
        self._index_path = self._dir / "registry.json"
        self._index: dict[str, Any] = self._load_index()

    # ------------------------------------------------------------------
    # Public API
    # ------------------------------------------------------------------

    def layout_key(self, prices: np.ndarray) -> str:
        return f"layout_{prices_digest(prices)[:32]}"

    def types_key(self, prices: np.ndarray, cap: int) -> str:
        return f"types_{prices_digest(prices)[:32]}_{int(cap)}"

    def get_layout(self, prices: np.ndarray) -> Optional[PatchLayout]:
        """Cached layout for ``prices``, or ``None``."""
        payload = self._read(self.layout_key(prices))
        if payload is None:
            return None
        try:
            layout = PatchLayout.from_dict(payload)
        except (KeyError, TypeError, ValueError) as exc:
            logger.error("Cached layout is malformed (%s); ignoring it.", exc)
            return None
        if layout.prices.shape != np.shape(prices) or not np.array_equal(layout.prices, prices):
            logger.warning("Cached layout was built for other prices; ignoring it.")
            return None
        logger.info("Reusing cached patch layout (%d rows)", layout.total_rows)
        return layout

    def put_layout(self, layout: PatchLayout) -> Path:
        key = self.layout_key(layout.prices)
        return self._write(key, layout.to_dict(), {"kind": "layout", "rows": layout.total_rows})

    def get_types(self, layout: PatchLayout, cap: int) -> Optional[TypeMatrix]:
        """Cached type matrix for ``layout`` and ``cap``, or ``None``."""
        payload = self._read(self.types_key(layout.prices, cap))
        if payload is None:
            return None
        try:
            types = TypeMatrix.from_dict(payload, layout)
        except (KeyError, TypeError, ValueError, DataValidationError) as exc:
            logger.error("Cached type matrix is unusable (%s); ignoring it.", exc)
            return None
        logger.info("Reusing cached type matrix (H=%d)", types.H)
        return types

    def put_types(self, types: TypeMatrix, cap: int) -> Path:
        key = self.types_key(types.layout.prices, cap)
        return self._write(key, types.to_dict(), {"kind": "types", "H": types.H, "cap": int(cap)})

    def list_artifacts(self) -> list[dict[str, Any]]:
        """Index entries, one per stored artifact."""
        return [{"key": k, **v} for k, v in self._index.items()]

    # ------------------------------------------------------------------
    # Persistence helpers
    # ------------------------------------------------------------------

    def _read(self, key: str) -> Optional[dict[str, Any]]:
        path = self._dir / f"{key}.json"
        if not path.exists():
            return None
        try:
            with open(path, "r", encoding="utf-8") as fh:
                return json.load(fh)
        except (json.JSONDecodeError, OSError) as exc:
            logger.error("Failed to read cached artifact %s: %s; recomputing.", path, exc)
            return None

    def _write(self, key: str, payload: dict[str, Any], meta: dict[str, Any]) -> Path:
        self._dir.mkdir(parents=True, exist_ok=True)
        path = self._dir / f"{key}.json"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, ensure_ascii=False)
        self._index[key] = {
            **meta,
            "path": str(path),
            "stored_at": datetime.now(timezone.utc).isoformat(),
        }
        with open(self._index_path, "w", encoding="utf-8") as fh:
            json.dump(self._index, fh, indent=2, ensure_ascii=False)
        logger.info("Cached %s at %s", meta["kind"], path)
        return path

    def _load_index(self) -> dict[str, Any]:
        if not self._index_path.exists():
            return {}
        try:
            with open(self._index_path, "r", encoding="utf-8") as fh:
                return json.load(fh)
        except (json.JSONDecodeError, OSError) as exc:
            logger.error(
                "Failed to load registry at %s: %s; starting fresh.", self._index_path, exc
            )
            return {}
