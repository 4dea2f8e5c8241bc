# utils/errors.py
"""Exception hierarchy shared by the numerical modules and the CLI."""
from __future__ import annotations

from typing import Any, Optional


class LabError(Exception):
    """Base class for every failure raised by the lab."""


class GridError(LabError, ValueError):
    """A grid is too coarse or too small for the requested computation."""


class DivergentNormError(LabError, ValueError):
    """A norm or integral does not converge on the available grid."""


class SingularAtEnergy(LabError):
    def __init__(self, lam: float, sigma_min: float, message: Optional[str] = None):
        self.lam = float(lam)
        self.sigma_min = float(sigma_min)
        super().__init__(
            message
            or f"I + R0 V is singular at lambda={self.lam:.6g} (sigma_min={self.sigma_min:.3e})"
        )


class NonInvertibleSymbol(LabError):
    def __init__(self, lam: float, sigma_min: float, message: Optional[str] = None):
        self.lam = float(lam)
        self.sigma_min = float(sigma_min)
        super().__init__(
            message
            or f"I + T^(lambda) is not invertible at lambda={self.lam:.6g} (sigma_min={self.sigma_min:.3e})"
        )


class SmallnessViolated(LabError):
    def __init__(self, factor: float):
        self.factor = float(factor)
        super().__init__(f"Duhamel map is not a contraction (factor={self.factor:.4g})")


class HorizonError(LabError):
    def __init__(self, mass: float, message: Optional[str] = None):
        self.mass = float(mass)
        super().__init__(message or f"boundary mass {self.mass:.3e} exceeds threshold; enlarge r_max")


class IndeterminateResult(LabError):
    def __init__(self, message: str, data: Any = None):
        self.data = data
        super().__init__(message)


class ScenarioError(LabError):
    """Configuration problems; the CLI maps these to exit code 3."""


class ScenarioParseError(ScenarioError):
    pass


class UnknownOperation(ScenarioError):
    def __init__(self, op: str):
        self.op = op
        super().__init__(f"unknown operation: {op}")


class MissingParameter(ScenarioError):
    def __init__(self, op: str, param: str):
        self.op = op
        self.param = param
        super().__init__(f"operation {op} is missing parameter {param!r}")
