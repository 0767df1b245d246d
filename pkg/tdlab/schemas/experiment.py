"""
tdlab Experiment Schemas
Pydantic models for evaluate, sweep and compare configurations
"""

from enum import Enum
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from tdlab.core.config import get_settings
from tdlab.core.agents import Algorithm, StepSizeSchedule

MAX_SEED = 2**64 - 1


class SamplingRegime(str, Enum):
    """How transition streams are drawn"""
    IID_WEIGHTED = "iid_weighted"
    TRAJECTORY = "trajectory"


class BatchMode(str, Enum):
    """What one outer iteration of coordinate descent consumes"""
    SAMPLE = "sample"
    EXPECTED = "expected"


def _split_floats(value):
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    if isinstance(value, (int, float)):
        return [value]
    return value


class ScenarioSelection(BaseModel):
    """Scenario name or file plus per-run overrides"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    scenario: str = Field("paper-3state", description="Built-in name or path to a scenario file")
    discount: Optional[float] = Field(None, gt=0.0, le=1.0)
    epsilon_feature: Optional[float] = Field(None, gt=0.0)
    sampling: Optional[SamplingRegime] = None

    def scenario_key(self) -> tuple:
        return (self.scenario, self.discount, self.epsilon_feature, self.sampling)


# ============= Evaluate =============

class ExperimentConfig(ScenarioSelection):
    label: Optional[str] = Field(None, pattern=r"^[A-Za-z0-9_\-]+$")
    algorithm: Algorithm
    schedule: StepSizeSchedule
    aux_schedule: Optional[StepSizeSchedule] = None
    trace_decay: float = Field(0.0, ge=0.0, lt=1.0, description="lambda for td_lambda")
    inner_tolerance: float = Field(1e-8, gt=0.0)
    inner_cap: Optional[int] = Field(None, ge=1)
    divergence_threshold: Optional[float] = Field(None, gt=0.0)
    batch: BatchMode = BatchMode.SAMPLE
    initial: List[float] = Field(default_factory=lambda: [0.0], min_length=1)
    initial_aux: Optional[List[float]] = Field(None, min_length=1)
    steps: int = Field(..., ge=1)
    probe_every: int = Field(default_factory=lambda: get_settings().default_probe_every, ge=1)
    seed: int = Field(0, ge=0, le=MAX_SEED)
    tail_fraction: float = Field(0.5, gt=0.0, le=1.0)
    threshold: float = Field(0.01, gt=0.0, description="mspbe level for steps_to_threshold")
    threshold_window: int = Field(1, ge=1)

    @field_validator("initial", "initial_aux", mode="before")
    @classmethod
    def split_vectors(cls, v):
        return _split_floats(v)

    @model_validator(mode="after")
    def check_batch_mode(self) -> "ExperimentConfig":
        if self.batch is BatchMode.EXPECTED and self.algorithm is not Algorithm.COORDINATE_DESCENT:
            raise ValueError("batch = expected applies to coordinate_descent only")
        return self

    @property
    def display_label(self) -> str:
        return self.label or self.algorithm.value


# ============= Sweep =============

class SweepConfig(ScenarioSelection):
    theta_min: float = -10.0
    theta_max: float = 10.0
    theta_step: float = Field(0.01, gt=0.0)

    @model_validator(mode="after")
    def check_range(self) -> "SweepConfig":
        if self.theta_max <= self.theta_min:
            raise ValueError("theta_max must exceed theta_min")
        return self

    def grid(self) -> np.ndarray:
        """theta_min + theta_step * k for k = 0..K, K = round((max - min) / step)"""
        count = int(round((self.theta_max - self.theta_min) / self.theta_step)) + 1
        return self.theta_min + self.theta_step * np.arange(count)


# ============= Compare =============

class CompareConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    runs: List[ExperimentConfig] = Field(..., min_length=2)
    seed: Optional[int] = Field(None, ge=0, le=MAX_SEED, description="Parent seed for derived run seeds")
    workers: int = Field(default_factory=lambda: get_settings().compare_workers, ge=1)

    @model_validator(mode="after")
    def check_same_scenario(self) -> "CompareConfig":
        first = self.runs[0].scenario_key()
        for index, run in enumerate(self.runs[1:], start=1):
            if run.scenario_key() != first:
                raise ValueError(f"scenario mismatch: run {index} differs from run 0")
        return self

    def labels(self) -> List[str]:
        """Display labels, suffixed with the run index where they repeat"""
        raw = [run.display_label for run in self.runs]
        return [
            label if raw.count(label) == 1 else f"{label}_{index}"
            for index, label in enumerate(raw)
        ]
