"""
tdlab Plot Schemas
"""

from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator


class PlotSpec(BaseModel):
    """One SVG line chart from a CSV (or the CSV block of a run artifact)"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    input: Path
    x: str = "step"
    y: List[str] = Field(default_factory=lambda: ["mspbe"], min_length=1)
    log_x: bool = False
    log_y: bool = False
    title: Optional[str] = None
    output: Path

    @field_validator("y", mode="before")
    @classmethod
    def split_columns(cls, v):
        if isinstance(v, str):
            return [part.strip() for part in v.split(",") if part.strip()]
        return v
