from unittest.mock import patch

import requests

from models.config import Command, NtfyConfig
from models.hbar_estimate import HbarEstimate, Method
from models.run_outcome import RunOutcome
from services.ntfy import NtfyNotifier


def _outcome(value: float = 1.25) -> RunOutcome:
    return RunOutcome(
        command=Command.HBAR,
        estimates=[HbarEstimate((1.0, 0.0), 2.0, 0.1, Method.FRONT_SPEED, value, {"grid": 64}, 1e-3)],
    )


@patch("services.ntfy.requests.post")
def test_disabled_sends_nothing(post):
    NtfyNotifier(NtfyConfig(enabled=False, topic="flames")).notify(_outcome())
    post.assert_not_called()


@patch("services.ntfy.requests.post")
def test_missing_topic_sends_nothing(post):
    NtfyNotifier(NtfyConfig(enabled=True, topic="")).notify(_outcome())
    post.assert_not_called()


@patch("services.ntfy.requests.post")
def test_quiet_run_sends_nothing(post):
    NtfyNotifier(NtfyConfig(enabled=True, topic="flames")).notify(RunOutcome(command=Command.EVOLVE))
    post.assert_not_called()


@patch("services.ntfy.requests.post")
def test_reports_estimates(post):
    NtfyNotifier(NtfyConfig(enabled=True, topic="flames", server="https://ntfy.sh/")).notify(_outcome(1.25))

    post.assert_called_once()
    assert post.call_args.args[0] == "https://ntfy.sh/flames"
    body = post.call_args.kwargs["data"]
    assert b"front_speed" in body and b"1.25" in body
    assert post.call_args.kwargs["headers"]["Title"] == "gflame hbar: finished"


@patch("services.ntfy.requests.post")
def test_failed_run_is_flagged_even_without_results(post):
    NtfyNotifier(NtfyConfig(enabled=True, topic="flames")).notify(RunOutcome(command=Command.HBAR), failed=True)

    headers = post.call_args.kwargs["headers"]
    assert headers["Priority"] == "high"
    assert "failed" in headers["Title"]


@patch("services.ntfy.requests.post", side_effect=requests.ConnectionError("down"))
def test_network_errors_are_logged_not_raised(post, caplog):
    NtfyNotifier(NtfyConfig(enabled=True, topic="flames")).notify(_outcome())
    assert "Failed to send ntfy notification" in caplog.text
