"""
tdlab Control Schemas
"""

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from tdlab.core.coop import TargetUpdate
from tdlab.schemas.experiment import MAX_SEED


class RatesConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    primary: float = Field(0.5, gt=0.0, description="Rate of the r-set step")
    aux: float = Field(0.5, gt=0.0, description="Rate of the x-set step")


class EpsilonConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    start: float = Field(1.0, ge=0.0, le=1.0)
    end: float = Field(0.1, ge=0.0, le=1.0)
    decay_steps: Optional[int] = Field(None, ge=0, description="Defaults to half of steps")


class ControlConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: str = "gridworld-4x4"
    discount: Optional[float] = Field(None, gt=0.0, le=1.0)
    approximator: str = Field("tabular", pattern=r"^tabular$")
    steps: int = Field(50_000, ge=1)
    rates: RatesConfig = Field(default_factory=RatesConfig)
    epsilon: EpsilonConfig = Field(default_factory=EpsilonConfig)
    max_episode_steps: int = Field(100, ge=1)
    max_episodes: Optional[int] = Field(None, ge=1)
    target_update: TargetUpdate = TargetUpdate.OPTIMIZE
    initial_value: float = 0.0
    seed: int = Field(0, ge=0, le=MAX_SEED)

    @model_validator(mode="after")
    def resolve_decay(self) -> "ControlConfig":
        if self.epsilon.decay_steps is None:
            self.epsilon = self.epsilon.model_copy(update={"decay_steps": self.steps // 2})
        return self
