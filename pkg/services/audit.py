import json
import logging
from datetime import date, datetime
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from models.ellipse import ContainmentReport
from models.hbar_estimate import HbarEstimate
from models.trajectory import ReachReport

logger = logging.getLogger(__name__)


def _json_default(value: Any) -> Any:
    """Serialize datetimes, enums, numpy scalars (and any other unknown types) for JSON output."""
    if isinstance(value, datetime):
        return value.isoformat(timespec="seconds")
    if isinstance(value, date):
        return value.isoformat()
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


class AuditLog:
    """Append-only JSONL record of estimates, reach measurements and appendix checks."""

    def __init__(self, log_path: str, run_id: Optional[str] = None):
        """Create the parent directory of log_path; run_id tags every event of one run."""
        self.path = Path(log_path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.run_id = run_id or datetime.now().isoformat(timespec="seconds")

    def record_estimate(self, estimate: HbarEstimate, command: str) -> None:
        """Record one H estimate with its discretization and error indicator."""
        self._append(
            {
                "event": "estimate",
                "command": command,
                "valid": estimate.valid,
                **estimate.row(),
            }
        )

    def record_reach(self, report: ReachReport, command: str) -> None:
        """Record a reach measurement; the trajectory itself lives in the CSV."""
        self._append(
            {
                "event": "reach",
                "command": command,
                "start": report.start,
                "target": report.target,
                "steps": report.steps_used,
                "time": report.time_used,
                "success": report.success,
                "adversary": report.adversary,
                "events": report.trajectory.meta.get("events", []) if report.trajectory else [],
            }
        )

    def record_containment(self, report: ContainmentReport, command: str) -> None:
        self._append(
            {
                "event": "containment",
                "command": command,
                "passed": report.passed,
                "violations": sum(row.violations for row in report.rows),
                "min_margin": min((row.min_margin for row in report.rows), default=None),
                "boundary_values": {f"{theta:g}": value for theta, value in report.boundary_values.items()},
            }
        )

    def record_run(self, command: str, status: str, outputs: list, detail: Dict[str, Any] = None) -> None:
        """Record how a run ended and which artifacts it wrote."""
        self._append({"event": "run", "command": command, "status": status, "outputs": outputs, **(detail or {})})

    def _append(self, event: Dict[str, Any]) -> None:
        """Stamp the event with ts and run_id and write it as one line."""
        record = {
            "ts": datetime.now().isoformat(timespec="seconds"),
            "run_id": self.run_id,
            **event,
        }
        try:
            with self.path.open("a", encoding="utf-8") as handle:
                handle.write(json.dumps(record, default=_json_default) + "\n")
        except OSError as error:
            logger.error(f"Failed to write audit event {event.get('event')}: {error}")
