"""
Run Report
==========

Records each pipeline step of a CLI run together with the numeric
configuration that produced it, and serializes everything as the JSON
report printed on stdout (and optionally saved to ``--out``).

Architectural notes:
    - Step entries are append-only; the report is the source of truth for
      what ran and in what order.
    - Provenance (software version, seed, tau, replications, alpha, inputs)
      is embedded in every report so a result can be reproduced from the
      report alone.
    - Command results are attached under ``result`` as plain JSON values;
      numpy scalars and arrays are converted on the way out.
"""

import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional

import numpy as np

from revpref import __version__

logger = logging.getLogger(__name__)


def _jsonable(value: Any) -> Any:
    """Recursively convert numpy values to JSON-native ones."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if np.isfinite(v) else None
    return value


class RunReport:
    """In-memory log of pipeline steps with provenance and JSON persistence.

    Usage::

        report = RunReport("test", seed=7, tau=0.05, replications=1000, alpha=0.05)
        report.start_run()
        report.append_step("estimate_pi", "Patch frequencies", counts={"N": 1000})
        report.set_result(result.to_dict())
        report.save(Path("out/report.json"))
    """

    def __init__(
        self,
        command: str,
        *,
        seed: Optional[int] = None,
        tau: Optional[float] = None,
        replications: Optional[int] = None,
        alpha: Optional[float] = None,
        inputs: Optional[dict[str, str]] = None,
        config: Optional[dict[str, Any]] = None,
    ) -> None:
        self.command = command
        self.seed = seed
        self.tau = tau
        self.replications = replications
        self.alpha = alpha
        self.inputs = dict(inputs or {})
        self.config = dict(config or {})
        self.entries: list[dict[str, Any]] = []
        self.result: dict[str, Any] = {}
        self.status = "success"
        self.error: Optional[dict[str, Any]] = None
        self._run_started_at: Optional[str] = None

    def start_run(self) -> None:
        self._run_started_at = datetime.now(timezone.utc).isoformat()
        logger.debug("Run '%s' started at %s", self.command, self._run_started_at)

    def append_step(
        self,
        step_id: str,
        description: str,
        *,
        status: str = "success",
        counts: Optional[dict[str, Any]] = None,
        error_message: Optional[str] = None,
    ) -> None:
        """Append one pipeline step to the report."""
        entry: dict[str, Any] = {
            "step_id": step_id,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "description": description,
            "status": status,
        }
        if counts:
            entry["counts"] = _jsonable(counts)
        if error_message is not None:
            entry["error_message"] = error_message
        self.entries.append(entry)
        logger.debug("Step '%s' logged: %s", step_id, status)

    def set_result(self, result: dict[str, Any]) -> None:
        self.result = _jsonable(result)

    def fail(self, exc: BaseException, exit_code: int) -> None:
        """Mark the run failed with the exception that ended it."""
        self.status = "error"
        self.error = {"type": type(exc).__name__, "message": str(exc), "exit_code": exit_code}

    def to_dict(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "status": self.status,
            "version": __version__,
            "seed": self.seed,
            "tau": _jsonable(self.tau),
            "replications": self.replications,
            "alpha": self.alpha,
            "inputs": self.inputs,
            "config": _jsonable(self.config),
            "run_started_at": self._run_started_at,
            "run_finished_at": datetime.now(timezone.utc).isoformat(),
            "num_steps": len(self.entries),
            "steps": self.entries,
            "result": self.result,
            "error": self.error,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)

    def save(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, ensure_ascii=False)
        logger.info("Run report saved to %s", path)
        return path

    @classmethod
    def load(cls, path: Path) -> "RunReport":
        """Load a saved report; steps are preserved and new ones can be appended."""
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        report = cls(
            data["command"],
            seed=data.get("seed"),
            tau=data.get("tau"),
            replications=data.get("replications"),
            alpha=data.get("alpha"),
            inputs=data.get("inputs"),
            config=data.get("config"),
        )
        report._run_started_at = data.get("run_started_at")
        report.entries = data.get("steps", [])
        report.result = data.get("result", {})
        report.status = data.get("status", "success")
        report.error = data.get("error")
        return report
