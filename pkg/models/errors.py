from typing import List, Optional


class GflameError(Exception):
    """Base class for toolkit failures; carries the module that raised it."""

    module = "gflame"

    def __init__(self, message: str, module: Optional[str] = None):
        super().__init__(message)
        if module:
            self.module = module


class ConfigError(GflameError):
    """Malformed, unknown or invalid run configuration."""

    module = "cli"

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericalError(GflameError):
    """Non-finite values or an unstable numerical configuration."""


class CFLViolation(NumericalError):
    """A time step larger than the stability bound was requested."""

    def __init__(self, dt: float, admissible_dt: float, module: str = "levelset_pde"):
        super().__init__(
            f"dt={dt:.6g} exceeds the admissible step {admissible_dt:.6g}", module
        )
        self.dt = dt
        self.admissible_dt = admissible_dt


class ConvergenceError(NumericalError):
    """An iteration failed to reach its tolerance; keeps the residual history."""

    def __init__(self, message: str, residuals: List[float], module: str = "levelset_pde"):
        super().__init__(message, module)
        self.residuals = residuals


class AdmissibilityError(GflameError):
    """Parameters violate one of the inequalities a construction relies on."""

    module = "appendix_geometry"

    def __init__(self, inequality: str, detail: str = ""):
        message = f"violated: {inequality}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)
        self.inequality = inequality


class AcceptanceError(GflameError):
    """A cross-check between independent estimates failed."""
