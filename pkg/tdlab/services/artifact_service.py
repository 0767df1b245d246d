"""
Artifact Service - Run Artifacts and Tables on Disk
Serializes RunArtifacts and CSV tables deterministically and writes them
atomically (temporary file in the target directory, then os.replace).

Artifact envelope:

    # tdlab run artifact
    <resolved config, one key = value per line>
    rng = philox4x64
    status = completed | diverged | inner_cap_hit
    diverged_at_step = N        (diverged only)
    inner_cap_hits = N          (inner_cap_hit only)
    summary.<name> = value
    ---
    <metrics CSV>
"""

import io
import os
import tempfile
from pathlib import Path
from typing import Dict, Optional, Union

import pandas as pd
import structlog

from tdlab.core.exceptions import ConfigError, TableReadError
from tdlab.schemas.experiment import ExperimentConfig
from tdlab.schemas.flatfile import flatten, parse_flat_text, render_flat, validate_flat
from tdlab.services.experiment_service import RunArtifact, RunStatusKind

logger = structlog.get_logger(__name__)

SEPARATOR = "---"
HEADER = "# tdlab run artifact"
FLOAT_FORMAT = "%.17g"
META_KEYS = ("rng", "status", "diverged_at_step", "inner_cap_hits")
SUMMARY_PREFIX = "summary."


def _number(value: Optional[float]) -> str:
    return "none" if value is None else FLOAT_FORMAT % value


class ArtifactService:
    """Deterministic text forms for artifacts and tables"""

    def table_csv(self, frame: pd.DataFrame) -> str:
        return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")

    def config_block(self, config: ExperimentConfig) -> Dict[str, str]:
        return flatten(config.model_dump(mode="python"))

    def serialize_artifact(self, artifact: RunArtifact) -> str:
        meta = {"rng": artifact.rng, "status": artifact.status.kind.value}
        if artifact.status.kind is RunStatusKind.DIVERGED:
            meta["diverged_at_step"] = str(artifact.status.step)
        if artifact.status.kind is RunStatusKind.INNER_CAP_HIT:
            meta["inner_cap_hits"] = str(artifact.status.count)

        summary = artifact.summary
        meta[f"{SUMMARY_PREFIX}terminal_msbe"] = _number(summary.terminal_msbe)
        meta[f"{SUMMARY_PREFIX}terminal_mspbe"] = _number(summary.terminal_mspbe)
        meta[f"{SUMMARY_PREFIX}tail_mspbe"] = _number(summary.tail_mspbe)
        if summary.tail_estimate is not None:
            meta[f"{SUMMARY_PREFIX}tail_estimate"] = ", ".join(
                FLOAT_FORMAT % v for v in summary.tail_estimate
            )
        meta[f"{SUMMARY_PREFIX}steps_to_threshold"] = (
            "none" if summary.steps_to_threshold is None else str(summary.steps_to_threshold)
        )

        return (
            f"{HEADER}\n"
            + render_flat(self.config_block(artifact.config))
            + render_flat(meta)
            + f"{SEPARATOR}\n"
            + self.table_csv(artifact.metrics)
        )

    def split_envelope(self, text: str):
        """(header text, csv text); plain CSV has an empty header"""
        lines = text.splitlines(keepends=True)
        for index, line in enumerate(lines):
            if line.rstrip("\r\n") == SEPARATOR:
                return "".join(lines[:index]), "".join(lines[index + 1:])
        return "", text

    def parse_artifact_config(self, text: str) -> ExperimentConfig:
        """Rebuild the ExperimentConfig echoed in an artifact header"""
        header, _ = self.split_envelope(text)
        if not header:
            raise ConfigError("no artifact header before the '---' separator")
        entries = {
            key: entry
            for key, entry in parse_flat_text(header).items()
            if key not in META_KEYS and not key.startswith(SUMMARY_PREFIX)
        }
        return validate_flat(ExperimentConfig, entries)

    def parse_artifact_meta(self, text: str) -> Dict[str, str]:
        header, _ = self.split_envelope(text)
        return {
            key: entry.value
            for key, entry in parse_flat_text(header).items()
            if key in META_KEYS or key.startswith(SUMMARY_PREFIX)
        }

    def read_table(self, path: Union[str, Path]) -> pd.DataFrame:
        """CSV file, or the CSV block of an artifact"""
        try:
            _, csv_text = self.split_envelope(Path(path).read_text(encoding="utf-8"))
            return pd.read_csv(io.StringIO(csv_text))
        except UnicodeDecodeError as e:
            raise TableReadError(str(path), f"not UTF-8 text ({e.reason} at byte {e.start})") from e
        except pd.errors.EmptyDataError as e:
            raise TableReadError(str(path), "no columns to parse") from e
        except pd.errors.ParserError as e:
            raise TableReadError(str(path), str(e).strip()) from e

    def write_text(self, path: Union[str, Path], text: str) -> Path:
        return self.write_bytes(path, text.encode("utf-8"))

    def write_bytes(self, path: Union[str, Path], payload: bytes) -> Path:
        """Write to a temporary sibling and rename over path; no partial files"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(payload)
            os.replace(tmp_name, path)
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise
        logger.debug("artifact.written", path=str(path), size=len(payload))
        return path

    def write_artifact(self, path: Union[str, Path], artifact: RunArtifact) -> Path:
        return self.write_text(path, self.serialize_artifact(artifact))

    def write_table(self, path: Union[str, Path], frame: pd.DataFrame) -> Path:
        return self.write_text(path, self.table_csv(frame))


# Singleton
_artifact_service: Optional[ArtifactService] = None


def get_artifact_service() -> ArtifactService:
    """Get or create artifact service instance"""
    global _artifact_service
    if _artifact_service is None:
        _artifact_service = ArtifactService()
    return _artifact_service
