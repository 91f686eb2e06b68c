import logging
from datetime import datetime
from pathlib import Path
from typing import List

from models.run_outcome import RunOutcome

logger = logging.getLogger(__name__)


def _plural(count: int) -> str:
    """Return an 's' suffix for counts other than one."""
    return "" if count == 1 else "s"


class SummaryWriter:
    """Renders and writes the human-readable digest of the last run."""

    def __init__(self, summary_path: str):
        self.path = Path(summary_path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def write(self, outcome: RunOutcome) -> None:
        """Render the digest and overwrite the summary file."""
        try:
            self.path.write_text(self._render(outcome), encoding="utf-8")
        except OSError as error:
            logger.error(f"Failed to write summary file {self.path}: {error}")

    def _render(self, outcome: RunOutcome) -> str:
        """One header line, then one indented line per estimate, reach and check."""
        now = datetime.now()
        lines = [f"gflame {outcome.command.value} - last run {now.strftime('%Y-%m-%d %H:%M')}"]

        for estimate in outcome.estimates:
            flag = "" if estimate.valid else " (invalid)"
            lines.append(
                f"  H[{estimate.method.value}] p=({estimate.p[0]:g}, {estimate.p[1]:g}) "
                f"A={estimate.A:g} d={estimate.d:g}: {estimate.value:.6f} +/- {estimate.error_indicator:.2e}{flag}"
            )
        if outcome.growth_law is not None:
            fit = outcome.growth_law
            lines.append(f"  growth law: C1={fit.c_lower:.4f} C2={fit.c_upper:.4f} trend slope={fit.slope:.4f}")

        for report in outcome.reaches:
            verdict = "reached" if report.success else "missed"
            lines.append(
                f"  {verdict} {report.target} in {report.steps_used} step{_plural(report.steps_used)} "
                f"(t={report.time_used:.4f}) against {report.adversary}"
            )

        if outcome.containment is not None:
            report = outcome.containment
            violations = sum(row.violations for row in report.rows)
            margin = min((row.min_margin for row in report.rows), default=float("nan"))
            lines.append(
                f"  appendix: margin {margin:.4g}, {violations} violation{_plural(violations)}, "
                f"edge {'burnt' if report.boundary_burnt else 'NOT burnt'}"
            )

        for key, value in outcome.notes.items():
            lines.append(f"  {key}: {value:.6g}")

        lines.append(self._outputs_line(outcome.outputs))
        return "\n".join(lines) + "\n"

    @staticmethod
    def _outputs_line(outputs: List[str]) -> str:
        if not outputs:
            return "No artifacts written."
        return f"Wrote {len(outputs)} artifact{_plural(len(outputs))}: " + ", ".join(outputs)
