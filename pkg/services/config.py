import dataclasses
import math
import os
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import yaml
from dotenv import load_dotenv

from models.config import AuditConfig, Command, Config, NtfyConfig, NumericsConfig, RunConfig
from models.errors import ConfigError
from models.hbar_estimate import Method

STRATEGIES_I = ("descent", "follow_flow", "exit", "composite")
STRATEGIES_II = ("worst_case", "max_sign", "min_sign", "oppose_axis", "fixed")
TARGETS = ("level", "U2", "U3", "U4")


def _env_flag(name: str, default: bool) -> bool:
    """Read a boolean from the environment, falling back to a default when unset."""
    value = os.environ.get(name)
    if value is None:
        return default
    return value.strip().lower() in ("1", "true", "yes", "on")


class ConfigManager:
    def __init__(self, config_path: str = "config.yaml"):
        self.config_path = Path(config_path)

        # Load .env
        load_dotenv()

        # Load config.yaml
        self.config = self._load_config()

    def _load_config(self) -> Config:
        """
        Load solver defaults from config.yaml and merge environment overrides.

        A missing file yields the built-in defaults. Environment variables take
        precedence over the file:
        - GFLAME_OUTPUT_DIR: directory for CSV and snapshot outputs
        - GFLAME_WORKERS: thread count for sweeps
        - NTFY_ENABLED / NTFY_SERVER / NTFY_TOPIC: push notification settings

        Returns:
            Config: Numerics defaults, output directory, audit and ntfy settings

        Raises:
            ConfigError: If the file is not a mapping or a value has the wrong type.
        """
        data: Dict[str, Any] = {}
        if self.config_path.exists():
            with open(self.config_path) as f:
                data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"{self.config_path} must contain a mapping")

        numerics = data.get("numerics", {}) or {}
        if var := os.environ.get("GFLAME_WORKERS"):
            numerics["workers"] = var

        try:
            return Config(
                numerics=NumericsConfig(
                    eps_factor=float(numerics.get("eps_factor", 1.0)),
                    tol=float(numerics.get("tol", 1e-5)),
                    max_iterations=int(numerics.get("max_iterations", 500_000)),
                    grid=int(numerics.get("grid", 128)),
                    n_angles=int(numerics.get("n_angles", 64)),
                    n_radii=int(numerics.get("n_radii", 3)),
                    workers=int(numerics.get("workers", 4)),
                ),
                output_dir=os.environ.get("GFLAME_OUTPUT_DIR", data.get("output_dir", "output")),
                audit=AuditConfig(
                    log_path=data.get("audit", {}).get("log_path", "output/runs.jsonl"),
                    summary_path=data.get("audit", {}).get("summary_path", "output/last_run.txt"),
                ),
                ntfy=self._load_ntfy(data.get("ntfy", {})),
            )
        except (TypeError, ValueError) as error:
            raise ConfigError(f"{self.config_path}: {error}") from error

    def _load_ntfy(self, data: dict) -> NtfyConfig:
        """Build the ntfy config, letting NTFY_* env vars override the file."""
        return NtfyConfig(
            enabled=_env_flag("NTFY_ENABLED", data.get("enabled", False)),
            server=os.environ.get("NTFY_SERVER", data.get("server", "https://ntfy.sh")),
            topic=os.environ.get("NTFY_TOPIC", data.get("topic", "")),
            priority=data.get("priority", "default"),
        )


def _float_list(text: str) -> Tuple[float, ...]:
    return tuple(float(item) for item in text.replace(",", " ").split())


def _methods(text: str) -> Tuple[Method, ...]:
    return tuple(Method(item) for item in text.replace(",", " ").split())


def _optional_float(text: str) -> Optional[float]:
    return None if text.lower() in ("", "none") else float(text)


CONVERTERS: Dict[str, Callable[[str], Any]] = {
    "command": Command,
    "A": float,
    "d": float,
    "p1": float,
    "p2": float,
    "grid": int,
    "T": float,
    "burn_in": float,
    "checkpoint_every": float,
    "eps_factor": float,
    "lambdas": _float_list,
    "tol": float,
    "max_iterations": int,
    "tau": float,
    "n_angles": int,
    "n_radii": int,
    "game_grid": int,
    "game_T": float,
    "game_burn_in": float,
    "A_list": _float_list,
    "methods": _methods,
    "x1": float,
    "x2": float,
    "strategy_i": str,
    "strategy_ii": str,
    "target": str,
    "mu": float,
    "budget": float,
    "delta": float,
    "thetas": _float_list,
    "acceptance_tol": _optional_float,
    "output": str,
    "snapshot": str,
}


def _validate(run: RunConfig) -> List[Tuple[str, str]]:
    """(key, message) for every rule the run breaks."""
    problems = []

    def require(ok: bool, key: str, message: str):
        if not ok:
            problems.append((key, message))

    for item in dataclasses.fields(run):
        value = getattr(run, item.name)
        entries = value if isinstance(value, tuple) else (value,)
        numbers = [entry for entry in entries if isinstance(entry, float)]
        require(all(math.isfinite(entry) for entry in numbers), item.name, f"{item.name} must be finite")

    require(run.A >= 0, "A", f"A must be >= 0, got {run.A:g}")
    require(run.d >= 0, "d", f"d must be >= 0, got {run.d:g}")
    require(run.grid >= 16, "grid", f"grid must be >= 16, got {run.grid}")
    require(run.game_grid >= 16, "game_grid", f"game_grid must be >= 16, got {run.game_grid}")
    for key in ("T", "tau", "budget", "game_T", "checkpoint_every", "eps_factor", "tol"):
        value = getattr(run, key)
        require(value > 0, key, f"{key} must be > 0, got {value:g}")
    require(run.n_angles >= 8, "n_angles", f"n_angles must be >= 8, got {run.n_angles}")
    require(run.n_radii >= 2, "n_radii", f"n_radii must be >= 2, got {run.n_radii}")
    require(0 < run.mu < 1, "mu", f"mu must lie in (0, 1), got {run.mu:g}")

    require(bool(run.lambdas) and all(lam > 0 for lam in run.lambdas), "lambdas", "lambdas must be > 0")
    require(
        all(later < earlier for earlier, later in zip(run.lambdas, run.lambdas[1:])),
        "lambdas",
        "lambdas must be strictly decreasing",
    )
    require(all(A >= 0 for A in run.A_list), "A_list", "A_list entries must be >= 0")
    require(
        all(later > earlier for earlier, later in zip(run.A_list, run.A_list[1:])),
        "A_list",
        "A_list must be strictly increasing",
    )
    require(bool(run.methods), "methods", "methods must name at least one estimator")

    front_speed = Method.FRONT_SPEED in run.methods
    if run.command in (Command.HBAR, Command.SWEEP) and front_speed:
        require(0 <= run.burn_in < run.T, "burn_in", f"burn_in must lie in [0, T), got {run.burn_in:g}")
    require(
        0 <= run.game_burn_in < run.game_T,
        "game_burn_in",
        f"game_burn_in must lie in [0, game_T), got {run.game_burn_in:g}",
    )
    if run.command in (Command.HBAR, Command.SWEEP, Command.GAME):
        require(run.p1 != 0 or run.p2 != 0, "p1", "p must be nonzero")
    if run.command is Command.SWEEP:
        require(bool(run.A_list), "A_list", "missing required key A_list")

    require(run.strategy_i in STRATEGIES_I, "strategy_i", f"strategy_i must be one of {', '.join(STRATEGIES_I)}")
    require(
        run.strategy_ii in STRATEGIES_II, "strategy_ii", f"strategy_ii must be one of {', '.join(STRATEGIES_II)}"
    )
    require(run.target in TARGETS, "target", f"target must be one of {', '.join(TARGETS)}")

    require(0 < run.delta < 0.5, "delta", f"delta must lie in (0, 1/2), got {run.delta:g}")
    require(
        all(run.delta <= theta <= 1 - run.delta for theta in run.thetas),
        "thetas",
        "thetas must lie in [delta, 1 - delta]",
    )
    if run.acceptance_tol is not None:
        require(run.acceptance_tol > 0, "acceptance_tol", "acceptance_tol must be > 0")
    return problems


def parse_config(text: str, defaults: Optional[NumericsConfig] = None) -> RunConfig:
    """Parse a key=value run file into a validated RunConfig.

    Blank lines and lines starting with '#' are skipped. Keys missing from the
    file fall back to `defaults` (the config.yaml numerics block) and then to
    the RunConfig defaults.

    Raises:
        ConfigError: For malformed lines, unknown or repeated keys, bad values,
            a missing or unknown command, or a broken validation rule. The
            message carries the line number when one applies.
    """
    values: Dict[str, Any] = {}
    lines: Dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"expected key=value, got {line!r}", number)
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in CONVERTERS:
            raise ConfigError(f"unknown key {key!r}", number)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", number)
        try:
            values[key] = CONVERTERS[key](value)
        except ValueError as error:
            if key == "command":
                raise ConfigError(f"unknown command {value!r}", number) from error
            raise ConfigError(f"malformed value for {key}: {value!r}", number) from error
        lines[key] = number

    if "command" not in values:
        raise ConfigError("missing command")

    if defaults is not None:
        for key in ("grid", "eps_factor", "tol", "max_iterations", "n_angles", "n_radii"):
            values.setdefault(key, getattr(defaults, key))

    run = RunConfig(**values)
    problems = _validate(run)
    if problems:
        key, message = problems[0]
        raise ConfigError(message, lines.get(key))
    return run


def config_items(run: RunConfig) -> List[Tuple[str, str]]:
    """(key, text) for every field of the run, in declaration order."""
    items = []
    for item in dataclasses.fields(run):
        value = getattr(run, item.name)
        if isinstance(value, tuple):
            text = ",".join(entry.value if isinstance(entry, Method) else repr(entry) for entry in value)
        elif isinstance(value, (Command, Method)):
            text = value.value
        elif isinstance(value, float):
            text = repr(value)
        elif value is None:
            text = "none"
        else:
            text = str(value)
        items.append((item.name, text))
    return items


def render_config(run: RunConfig) -> str:
    """The validated run as key=value lines that parse_config accepts."""
    return "".join(f"{key}={text}\n" for key, text in config_items(run))
