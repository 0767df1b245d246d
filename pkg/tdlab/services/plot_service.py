"""
Plot Service - SVG Line Charts
Renders CSV columns (plain tables or artifact CSV blocks) with matplotlib's
Agg/SVG backend. The SVG hash salt is fixed and the Date metadata dropped, so
identical inputs give identical bytes.
"""

import io
from typing import Optional

import matplotlib

matplotlib.use("Agg")

from matplotlib.backends.backend_svg import FigureCanvasSVG  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402
import numpy as np  # noqa: E402
import structlog  # noqa: E402

from tdlab.core.exceptions import ConfigError  # noqa: E402
from tdlab.schemas.plot import PlotSpec  # noqa: E402
from tdlab.services.artifact_service import get_artifact_service  # noqa: E402

logger = structlog.get_logger(__name__)

SVG_RC = {
    "svg.hashsalt": "tdlab",
    "svg.fonttype": "path",
    "font.family": "DejaVu Sans",
    "axes.unicode_minus": False,
}


class PlotService:
    """PlotSpec -> SVG bytes"""

    def render(self, spec: PlotSpec) -> bytes:
        frame = get_artifact_service().read_table(spec.input)
        for column in [spec.x, *spec.y]:
            if column not in frame.columns:
                raise ConfigError(
                    f"column {column!r} not found in {spec.input} (have {', '.join(frame.columns)})",
                    key_path="x" if column == spec.x else "y",
                )

        with matplotlib.rc_context(SVG_RC):
            figure = Figure(figsize=(7.0, 4.5))
            FigureCanvasSVG(figure)
            axes = figure.add_subplot(1, 1, 1)
            x = frame[spec.x].to_numpy(dtype=np.float64)
            single = len(frame) == 1
            for column in spec.y:
                axes.plot(
                    x,
                    frame[column].to_numpy(dtype=np.float64),
                    label=column,
                    marker="o" if single else None,
                    linewidth=1.2,
                )
            if spec.log_x:
                axes.set_xscale("log")
            if spec.log_y:
                axes.set_yscale("log")
            axes.set_xlabel(spec.x)
            axes.set_ylabel(spec.y[0] if len(spec.y) == 1 else "value")
            if spec.title:
                axes.set_title(spec.title)
            axes.grid(True, alpha=0.3)
            axes.legend(loc="best")

            buffer = io.BytesIO()
            figure.savefig(buffer, format="svg", metadata={"Date": None})
        payload = buffer.getvalue()
        logger.debug("plot.rendered", input=str(spec.input), columns=spec.y, size=len(payload))
        return payload

    def write(self, spec: PlotSpec) -> None:
        get_artifact_service().write_bytes(spec.output, self.render(spec))


# Singleton
_plot_service: Optional[PlotService] = None


def get_plot_service() -> PlotService:
    """Get or create plot service instance"""
    global _plot_service
    if _plot_service is None:
        _plot_service = PlotService()
    return _plot_service
