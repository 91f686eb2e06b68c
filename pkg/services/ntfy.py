import logging
from typing import Tuple

import requests

from models.config import NtfyConfig
from models.run_outcome import RunOutcome

logger = logging.getLogger(__name__)


class NtfyNotifier:
    """Pushes a short summary to ntfy when a batch experiment finishes."""

    def __init__(self, config: NtfyConfig):
        self.config = config

    def notify(self, outcome: RunOutcome, failed: bool = False) -> None:
        """Push the run outcome to the configured topic.

        Nothing is sent unless ntfy is enabled with a topic and the run either
        failed or produced results.

        Args:
            outcome: What the run produced.
            failed: Whether an acceptance check rejected the results.
        """
        if not self.config.enabled or not self.config.topic:
            return

        if not outcome.has_results and not failed:
            return

        title, message = self._compose(outcome, failed)

        try:
            requests.post(
                f"{self.config.server.rstrip('/')}/{self.config.topic}",
                data=message.encode("utf-8"),
                headers={
                    "Title": title,
                    "Priority": "high" if failed else self.config.priority,
                    "Tags": "warning" if failed else "fire",
                },
                timeout=10,
            )
        except requests.RequestException as error:
            logger.error(f"Failed to send ntfy notification: {error}")

    def _compose(self, outcome: RunOutcome, failed: bool) -> Tuple[str, str]:
        """Title names the command; the body lists one line per result."""
        title = f"gflame {outcome.command.value}: " + ("acceptance check failed" if failed else "finished")

        lines = []
        for estimate in outcome.estimates:
            lines.append(
                f"- {estimate.method.value} A={estimate.A:g} d={estimate.d:g}: H={estimate.value:.5f}"
            )
        for report in outcome.reaches:
            lines.append(f"- {report.target}: {'reached' if report.success else 'missed'} at t={report.time_used:.4f}")
        if outcome.containment is not None:
            lines.append(f"- appendix check {'passed' if outcome.containment.passed else 'failed'}")
        for key, value in outcome.notes.items():
            lines.append(f"- {key}: {value:.6g}")

        return title, "\n".join(lines)
