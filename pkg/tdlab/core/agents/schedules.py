"""
Step-size schedules
"""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field


class ScheduleKind(str, Enum):
    """Available step-size schedules"""
    CONSTANT = "constant"
    HARMONIC = "harmonic"


class StepSizeSchedule(BaseModel):
    """
    gamma_t for the online updates.

    constant: gamma_t = base
    harmonic: gamma_t = base / (offset + t), positive and nonincreasing in t
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: ScheduleKind = ScheduleKind.CONSTANT
    base: float = Field(..., gt=0.0, description="Constant rate or harmonic numerator")
    offset: float = Field(1.0, gt=0.0, description="Harmonic denominator offset")

    def rate(self, t: int) -> float:
        if self.kind is ScheduleKind.HARMONIC:
            return self.base / (self.offset + t)
        return self.base
