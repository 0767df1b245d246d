"""
Experiment Service - Runs, Sweeps and Comparisons
Drives steppers over seeded streams with exact probes and packages the
results as RunArtifacts.

Divergence never escapes this service: it becomes a diverged(step) status
on an artifact that still holds every finite record up to that point.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from itertools import repeat
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd
import structlog

from tdlab.core.config import get_settings
from tdlab.core.exceptions import ContractViolation, DivergenceError, ScenarioError
from tdlab.core.chain import msbe, mspbe
from tdlab.core.agents import (
    EvaluatorState,
    MetricsRecord,
    Probe,
    Stepper,
    TailAverage,
    iter_trajectory,
    steps_to_threshold,
)
from tdlab.schemas.experiment import BatchMode, CompareConfig, ExperimentConfig, ScenarioSelection, SweepConfig
from tdlab.services.scenario_service import Scenario, get_scenario_service
from tdlab.services.stream_service import derive_seed, get_stream_service

logger = structlog.get_logger(__name__)


class RunStatusKind(str, Enum):
    COMPLETED = "completed"
    DIVERGED = "diverged"
    INNER_CAP_HIT = "inner_cap_hit"


@dataclass(frozen=True)
class RunStatus:
    kind: RunStatusKind
    step: Optional[int] = None
    count: Optional[int] = None

    def __str__(self):
        if self.kind is RunStatusKind.DIVERGED:
            return f"diverged at step {self.step}"
        if self.kind is RunStatusKind.INNER_CAP_HIT:
            return f"inner_cap_hit ({self.count} inner loops capped)"
        return self.kind.value


@dataclass(frozen=True, eq=False)
class RunSummary:
    terminal_msbe: float
    terminal_mspbe: float
    tail_estimate: Optional[np.ndarray]
    tail_mspbe: Optional[float]
    steps_to_threshold: Optional[int]


@dataclass(frozen=True, eq=False)
class RunArtifact:
    """Resolved config echo, metrics table and termination status of one run"""

    config: ExperimentConfig
    metrics: pd.DataFrame
    status: RunStatus
    summary: RunSummary
    rng: str

    @property
    def diverged(self) -> bool:
        return self.status.kind is RunStatusKind.DIVERGED


@dataclass(frozen=True, eq=False)
class CompareResult:
    artifacts: List[RunArtifact]
    labels: List[str]
    table: pd.DataFrame


def metrics_frame(records: List[MetricsRecord], n_features: int) -> pd.DataFrame:
    """step, param_*, aux_*, msbe, mspbe, td_error, wall_us"""
    columns = (
        ["step"]
        + [f"param_{k}" for k in range(n_features)]
        + [f"aux_{k}" for k in range(n_features)]
        + ["msbe", "mspbe", "td_error", "wall_us"]
    )
    rows = [
        [r.step_index, *r.primary.tolist(), *r.aux.tolist(), r.msbe, r.mspbe, r.td_error, r.wall_us]
        for r in records
    ]
    frame = pd.DataFrame(rows, columns=columns)
    return frame.astype({"step": "int64", "wall_us": "int64"})


class ExperimentService:
    """Evaluate, sweep and compare"""

    def __init__(self):
        self.scenarios = get_scenario_service()
        self.streams = get_stream_service()

    def scenario_for(self, selection: ScenarioSelection, base_dir: Optional[Path] = None) -> Scenario:
        scenario = self.scenarios.resolve(
            selection.scenario,
            selection.discount,
            selection.epsilon_feature,
            selection.sampling,
            base_dir=base_dir,
        )
        if not scenario.is_linear:
            raise ScenarioError(f"scenario {scenario.name} is a control scenario; use the control command")
        return scenario

    def stepper_for(self, config: ExperimentConfig, scenario: Scenario) -> Stepper:
        return Stepper(
            algorithm=config.algorithm,
            features=scenario.features,
            discount=scenario.discount,
            schedule=config.schedule,
            aux_schedule=config.aux_schedule,
            trace_decay=config.trace_decay,
            inner_tolerance=config.inner_tolerance,
            inner_cap=config.inner_cap,
            divergence_threshold=config.divergence_threshold,
        )

    def resolve_config(self, config: ExperimentConfig, scenario: Scenario, stepper: Stepper) -> ExperimentConfig:
        """
        The config with every settings-dependent default filled in, so the
        echo in an artifact header reruns the same trajectory.
        """
        update = {
            "discount": scenario.discount,
            "sampling": scenario.sampling,
            "inner_cap": stepper.inner_cap,
            "divergence_threshold": stepper.divergence_threshold,
        }
        if scenario.epsilon_feature is not None:
            update["epsilon_feature"] = scenario.epsilon_feature
        return config.model_copy(update=update)

    def run(self, config: ExperimentConfig, base_dir: Optional[Path] = None) -> RunArtifact:
        """
        Execute config.steps steps, probing at step 0, every probe_every
        steps and at the last step.
        """
        settings = get_settings()
        scenario = self.scenario_for(config, base_dir)
        stepper = self.stepper_for(config, scenario)
        config = self.resolve_config(config, scenario, stepper)
        state = stepper.new(config.initial, config.initial_aux)

        if config.batch is BatchMode.EXPECTED:
            stream = repeat(self.scenarios.expected_batch(scenario), config.steps)
        else:
            stream = self.streams.transition_stream(scenario, config.seed, config.steps)

        tail = TailAverage(config.steps, config.tail_fraction)
        last: List[EvaluatorState] = [state]

        def observe(successor: EvaluatorState) -> None:
            tail(successor)
            last[0] = successor

        probe = Probe(scenario.mrp, scenario.features, settings.record_wall_time)
        records: List[MetricsRecord] = []
        status = RunStatus(RunStatusKind.COMPLETED)
        log = logger.bind(algorithm=config.algorithm.value, scenario=scenario.name, seed=config.seed)
        log.info("experiment.started", steps=config.steps, probe_every=config.probe_every)
        try:
            for record in iter_trajectory(
                stepper, state, stream, probe, config.probe_every, include_initial=True, observer=observe
            ):
                records.append(record)
        except DivergenceError as e:
            status = RunStatus(RunStatusKind.DIVERGED, step=e.step_index)
            log.warning("experiment.diverged", step=e.step_index, norm=e.norm)

        if status.kind is RunStatusKind.COMPLETED and last[0].inner_cap_hits:
            status = RunStatus(RunStatusKind.INNER_CAP_HIT, count=last[0].inner_cap_hits)

        summary = self._summarize(config, scenario, records, tail, status)
        log.info(
            "experiment.completed",
            status=status.kind.value,
            terminal_mspbe=summary.terminal_mspbe,
            tail_mspbe=summary.tail_mspbe,
        )
        return RunArtifact(
            config=config,
            metrics=metrics_frame(records, scenario.n_features),
            status=status,
            summary=summary,
            rng=self.streams.rng_name,
        )

    def _summarize(
        self,
        config: ExperimentConfig,
        scenario: Scenario,
        records: List[MetricsRecord],
        tail: TailAverage,
        status: RunStatus,
    ) -> RunSummary:
        final = records[-1]
        tail_estimate = tail.value if status.kind is not RunStatusKind.DIVERGED else None
        tail_mspbe = None
        if tail_estimate is not None:
            tail_mspbe = mspbe(scenario.mrp, scenario.features, tail_estimate)
        return RunSummary(
            terminal_msbe=final.msbe,
            terminal_mspbe=final.mspbe,
            tail_estimate=tail_estimate,
            tail_mspbe=tail_mspbe,
            steps_to_threshold=steps_to_threshold(records, config.threshold, config.threshold_window),
        )

    def sweep(self, config: SweepConfig, base_dir: Optional[Path] = None) -> pd.DataFrame:
        """Exact (theta, msbe, mspbe) over a scalar grid"""
        scenario = self.scenario_for(config, base_dir)
        if scenario.n_features != 1:
            raise ContractViolation(
                f"sweep needs a scalar-parameter scenario, {scenario.name} has k = {scenario.n_features}"
            )
        grid = config.grid()
        frame = pd.DataFrame({
            "theta": grid,
            "msbe": [msbe(scenario.mrp, scenario.features, theta) for theta in grid],
            "mspbe": [mspbe(scenario.mrp, scenario.features, theta) for theta in grid],
        })
        logger.info("sweep.completed", scenario=scenario.name, points=len(frame))
        return frame

    def compare(self, config: CompareConfig, base_dir: Optional[Path] = None) -> CompareResult:
        """
        Run every config on its own stream and align the probes by step.

        With a parent seed each run gets derive_seed(parent, index); without
        one every config keeps its own seed. Results are ordered by run index.
        """
        runs = list(config.runs)
        if config.seed is not None:
            runs = [
                run.model_copy(update={"seed": derive_seed(config.seed, index)})
                for index, run in enumerate(runs)
            ]
        labels = config.labels()
        logger.info("compare.started", runs=len(runs), workers=config.workers)
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            artifacts = list(pool.map(lambda run: self.run(run, base_dir), runs))

        table: Optional[pd.DataFrame] = None
        for label, artifact in zip(labels, artifacts):
            columns = artifact.metrics[["step", "msbe", "mspbe"]].rename(
                columns={"msbe": f"msbe_{label}", "mspbe": f"mspbe_{label}"}
            )
            table = columns if table is None else table.merge(columns, on="step", how="outer")
        table = table.sort_values("step", kind="stable").reset_index(drop=True)
        return CompareResult(artifacts, labels, table)


# Singleton
_experiment_service: Optional[ExperimentService] = None


def get_experiment_service() -> ExperimentService:
    """Get or create experiment service instance"""
    global _experiment_service
    if _experiment_service is None:
        _experiment_service = ExperimentService()
    return _experiment_service
