from .scenario_service import Scenario, ScenarioService, get_scenario_service
from .stream_service import StreamService, derive_seed, get_stream_service
from .experiment_service import (
    CompareResult,
    ExperimentService,
    RunArtifact,
    RunStatus,
    RunStatusKind,
    RunSummary,
    get_experiment_service,
)
from .artifact_service import ArtifactService, get_artifact_service
from .control_service import ControlResult, ControlService, get_control_service
from .plot_service import PlotService, get_plot_service

__all__ = [
    "Scenario", "ScenarioService", "get_scenario_service",
    "StreamService", "derive_seed", "get_stream_service",
    "CompareResult", "ExperimentService", "RunArtifact", "RunStatus", "RunStatusKind",
    "RunSummary", "get_experiment_service",
    "ArtifactService", "get_artifact_service",
    "ControlResult", "ControlService", "get_control_service",
    "PlotService", "get_plot_service",
]
