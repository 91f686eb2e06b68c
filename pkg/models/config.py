from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from models.hbar_estimate import Method


class Command(str, Enum):
    EVOLVE = "evolve"
    HBAR = "hbar"
    GAME = "game"
    TRAJECTORY = "trajectory"
    SWEEP = "sweep"
    APPENDIX_CHECK = "appendix-check"


@dataclass
class NumericsConfig:
    eps_factor: float = 1.0
    tol: float = 1e-5
    max_iterations: int = 500_000
    grid: int = 128
    n_angles: int = 64
    n_radii: int = 3
    workers: int = 4


@dataclass
class AuditConfig:
    log_path: str = "output/runs.jsonl"
    summary_path: str = "output/last_run.txt"


@dataclass
class NtfyConfig:
    enabled: bool = False
    server: str = "https://ntfy.sh"
    topic: str = ""
    priority: str = "default"


@dataclass
class Config:
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    output_dir: str = "output"
    audit: AuditConfig = field(default_factory=AuditConfig)
    ntfy: NtfyConfig = field(default_factory=NtfyConfig)


@dataclass
class RunConfig:
    """One experiment, as read from a key=value run file.

    Keys absent from the file keep these defaults, or the numerics block of
    config.yaml for grid, eps_factor, tol, n_angles and n_radii.
    """

    command: Command
    A: float = 0.0
    d: float = 0.0
    p1: float = 1.0
    p2: float = 0.0
    grid: int = 128
    T: float = 40.0
    burn_in: float = 10.0
    checkpoint_every: float = 1.0
    eps_factor: float = 1.0
    lambdas: Tuple[float, ...] = (0.2, 0.1, 0.05)
    tol: float = 1e-5
    max_iterations: int = 500_000
    tau: float = 0.02
    n_angles: int = 64
    n_radii: int = 3
    game_grid: int = 48
    game_T: float = 2.0
    game_burn_in: float = 0.0
    A_list: Tuple[float, ...] = ()
    methods: Tuple[Method, ...] = (Method.FRONT_SPEED,)
    x1: float = float(np.pi / 2)
    x2: float = float(np.arcsin(0.9))
    strategy_i: str = "descent"
    strategy_ii: str = "worst_case"
    target: str = "level"
    mu: float = 0.01
    budget: float = 20.0
    delta: float = 0.4
    thetas: Tuple[float, ...] = (0.4, 0.5, 0.6)
    acceptance_tol: Optional[float] = None
    output: str = ""
    snapshot: str = ""

    @property
    def p(self) -> Tuple[float, float]:
        return (self.p1, self.p2)
