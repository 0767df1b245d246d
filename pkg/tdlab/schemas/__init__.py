# tdlab Schemas
from .flatfile import (
    FlatEntry,
    apply_overrides,
    flatten,
    nest,
    parse_flat_text,
    read_flat_file,
    render_flat,
    validate_flat,
)
from .experiment import (
    BatchMode,
    CompareConfig,
    ExperimentConfig,
    SamplingRegime,
    ScenarioSelection,
    SweepConfig,
)
from .control import ControlConfig, EpsilonConfig, RatesConfig
from .plot import PlotSpec

__all__ = [
    "FlatEntry", "apply_overrides", "flatten", "nest", "parse_flat_text",
    "read_flat_file", "render_flat", "validate_flat",
    "BatchMode", "CompareConfig", "ExperimentConfig", "SamplingRegime",
    "ScenarioSelection", "SweepConfig",
    "ControlConfig", "EpsilonConfig", "RatesConfig",
    "PlotSpec",
]
