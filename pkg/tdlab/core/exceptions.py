"""
tdlab Exceptions
"""

from typing import Optional

import numpy as np


class LabError(Exception):
    """Base exception for tdlab"""

    def __init__(self, message: str, code: str = "LAB_ERROR"):
        self.message = message
        self.code = code
        super().__init__(self.message)

    def __str__(self):
        return f"[{self.code}] {self.message}"


class ContractViolation(LabError):
    """Raised when an operation's preconditions (shapes, ranges) do not hold"""

    def __init__(self, message: str):
        super().__init__(message, code="CONTRACT_VIOLATION")


class DegenerateFeaturesError(LabError):
    """Raised when the D-weighted Gram matrix is singular or ill-conditioned"""

    def __init__(self, condition_number: float, bound: float):
        self.condition_number = condition_number
        self.bound = bound
        super().__init__(
            f"degenerate features under weighting: Gram condition number "
            f"{condition_number:.6g} exceeds {bound:.6g}",
            code="DEGENERATE_FEATURES",
        )


class NoFixedPointError(LabError):
    """Raised when the TD system matrix A has no stable inverse"""

    def __init__(self, matrix: np.ndarray, condition_number: float):
        self.matrix = matrix
        self.condition_number = condition_number
        super().__init__(
            f"no unique TD fixed point: A = {np.array2string(matrix, precision=6)} "
            f"(condition number {condition_number:.6g})",
            code="NO_FIXED_POINT",
        )


class UnboundedValueError(LabError):
    """Raised for exact value solves at discount 1"""

    def __init__(self):
        super().__init__(
            "undiscounted value may be unbounded; exact_value requires discount < 1",
            code="UNBOUNDED_VALUE",
        )


class DivergenceError(LabError):
    """Raised when stepper parameters become non-finite or exceed the norm threshold"""

    def __init__(self, step_index: int, norm: float):
        self.step_index = step_index
        self.norm = norm
        super().__init__(
            f"parameters diverged at step {step_index} (norm {norm:.6g})",
            code="DIVERGED",
        )


class ConfigError(LabError):
    """Raised when a config or scenario file fails to parse or validate"""

    def __init__(
        self,
        message: str,
        key_path: Optional[str] = None,
        line: Optional[int] = None,
        column: Optional[int] = None,
    ):
        self.key_path = key_path
        self.line = line
        self.column = column
        location = ""
        if line is not None:
            location = f"line {line}, column {column or 1}: "
        if key_path:
            location += f"{key_path}: "
        super().__init__(f"{location}{message}", code="CONFIG_ERROR")


class ScenarioError(LabError):
    """Raised for unknown or invalid scenarios"""

    def __init__(self, message: str):
        super().__init__(message, code="SCENARIO_ERROR")


class TableReadError(LabError):
    """Raised when a CSV or artifact input cannot be decoded or parsed"""

    def __init__(self, path: str, reason: str):
        self.path = path
        super().__init__(f"cannot read table {path}: {reason}", code="TABLE_READ_ERROR")
