"""Standalone SVG figures: StationPlot scatters with hull overlays and box plots."""

from __future__ import annotations

import io
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import matplotlib
import numpy as np
from matplotlib.axes import Axes
from matplotlib.figure import Figure
from matplotlib.patches import Polygon
from matplotlib.ticker import MaxNLocator
from numpy.typing import ArrayLike, NDArray

from .const import DOMAIN, HEALTHY_LABELS, SEIZURE_LABEL
from .embedding import PointCloud
from .exceptions import DataError
from .geometry import ConvexHull2D
from .stats import BoxplotSummary

HEALTHY_COLOR = "#2ca02c"
SEIZURE_COLOR = "#1f77b4"
LIMIT_PAD = 0.05
# (x, y) column pairs of the three orthogonal views of a 3D cloud
PROJECTIONS = ((0, 1), (0, 2), (1, 2))
# One figure pixel is one SVG point.
_DPI = 72

_SVG_RC = {
    "svg.hashsalt": DOMAIN,
    "svg.fonttype": "none",
    "axes.unicode_minus": False,
}


def _default_colors() -> dict[str, str]:
    colors = {label: HEALTHY_COLOR for label in HEALTHY_LABELS}
    colors[SEIZURE_LABEL] = SEIZURE_COLOR
    return colors


@dataclass(frozen=True)
class PlotStyle:
    width: int = 480
    height: int = 400
    point_radius: float = 1.2
    margin: int = 56
    axis_tick_count: int = 5
    class_colors: Mapping[str, str] = field(default_factory=_default_colors)
    default_color: str = "#555555"
    hull_color: str = "#d62728"
    font_size: int = 11

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("Plot dimensions must be positive")
        if not 0 <= self.margin < min(self.width, self.height) / 2:
            raise ValueError("Margins must be smaller than half the plot dimensions")
        if self.axis_tick_count < 1:
            raise ValueError("axis_tick_count must be >= 1")

    def color_for(self, label: str) -> str:
        return self.class_colors.get(label, self.default_color)


def axis_limits(values: ArrayLike) -> tuple[float, float]:
    """Data range padded by 5% per side; a zero range gets a unit window."""
    v = np.asarray(values, dtype=np.float64)
    lo, hi = float(v.min()), float(v.max())
    span = hi - lo
    if span <= 0:
        half = 0.5 if lo == 0 else abs(lo) * LIMIT_PAD
        return lo - half, hi + half
    return lo - LIMIT_PAD * span, hi + LIMIT_PAD * span


def figure_to_svg(fig: Figure) -> str:
    """Serialize without timestamps or random ids so equal figures give equal bytes."""
    buf = io.StringIO()
    with matplotlib.rc_context(_SVG_RC):
        fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()


def _views(cloud: PointCloud) -> list[tuple[int, int]]:
    return [(0, 1)] if cloud.dimension == 2 else list(PROJECTIONS)


def _panel_axes(fig: Figure, index: int, panels: int, style: PlotStyle) -> Axes:
    total = style.width * panels
    rect = (
        (index * style.width + style.margin) / total,
        style.margin / style.height,
        (style.width - 2 * style.margin) / total,
        (style.height - 2 * style.margin) / style.height,
    )
    ax = fig.add_axes(rect)
    ax.tick_params(labelsize=style.font_size)
    ax.xaxis.set_major_locator(MaxNLocator(style.axis_tick_count))
    ax.yaxis.set_major_locator(MaxNLocator(style.axis_tick_count))
    return ax


def _axis_name(order: int, column: int) -> str:
    return f"Δ^{order + column} x"


def stationplot_figure(
    cloud: PointCloud,
    hull: ConvexHull2D | Sequence[ConvexHull2D | None] | None = None,
    style: PlotStyle | None = None,
    title: str | None = None,
) -> Figure:
    """Scatter of a StationPlot; 3D clouds become three side-by-side views.

    For 3D clouds ``hull`` may be a sequence holding one hull per view.
    """
    style = style or PlotStyle()
    if len(cloud) == 0:
        raise DataError("Cannot render an empty point cloud", source=cloud.source_id)

    views = _views(cloud)
    if hull is None or isinstance(hull, ConvexHull2D):
        hulls: list[ConvexHull2D | None] = [hull] + [None] * (len(views) - 1)
    else:
        hulls = list(hull) + [None] * (len(views) - len(hull))

    fig = Figure(figsize=(style.width * len(views) / _DPI, style.height / _DPI), dpi=_DPI)
    if title:
        fig.suptitle(title, fontsize=style.font_size, x=0.02, ha="left", y=0.98)
    color = style.color_for(cloud.label)
    for i, axes in enumerate(views):
        pts = cloud.points[:, list(axes)]
        ax = _panel_axes(fig, i, len(views), style)
        ax.set_gid(f"panel{i}")
        ax.set_xlim(*axis_limits(pts[:, 0]))
        ax.set_ylim(*axis_limits(pts[:, 1]))
        ax.set_xlabel(_axis_name(cloud.order, axes[0]), fontsize=style.font_size)
        ax.set_ylabel(_axis_name(cloud.order, axes[1]), fontsize=style.font_size)
        points = ax.scatter(
            pts[:, 0], pts[:, 1], s=(2 * style.point_radius) ** 2, c=color, linewidths=0
        )
        points.set_gid(f"points{i}")
        panel_hull = hulls[i]
        if panel_hull is not None:
            outline = Polygon(
                panel_hull.vertices,
                closed=True,
                fill=False,
                edgecolor=style.hull_color,
                linewidth=1.5,
            )
            outline.set_gid(f"hull{i}")
            ax.add_patch(outline)
    return fig


def render_stationplot(
    cloud: PointCloud,
    hull: ConvexHull2D | Sequence[ConvexHull2D | None] | None = None,
    style: PlotStyle | None = None,
    title: str | None = None,
) -> str:
    return figure_to_svg(stationplot_figure(cloud, hull, style, title))


def pixel_coordinates(cloud: PointCloud, style: PlotStyle | None = None) -> list[NDArray[np.float64]]:
    """Pixel positions of every point (origin top left), one array per panel."""
    fig = stationplot_figure(cloud, style=style)
    height = fig.bbox.height
    out = []
    for ax, axes in zip(fig.axes, _views(cloud), strict=True):
        xy = ax.transData.transform(cloud.points[:, list(axes)])
        out.append(np.column_stack([xy[:, 0], height - xy[:, 1]]))
    return out


def _bxp_stats(summary: BoxplotSummary, index: int) -> dict[str, object]:
    return {
        "label": summary.label or str(index + 1),
        "med": summary.median,
        "q1": summary.q1,
        "q3": summary.q3,
        "whislo": summary.whisker_low,
        "whishi": summary.whisker_high,
        "fliers": np.asarray(summary.outliers, dtype=np.float64),
    }


def boxplot_figure(
    summaries: Sequence[BoxplotSummary],
    style: PlotStyle | None = None,
    title: str | None = None,
    y_label: str = "",
) -> Figure:
    """One box-and-whisker glyph per summary, left to right in the given order."""
    style = style or PlotStyle()
    if not summaries:
        raise DataError("Box plot needs at least one summary")
    fig = Figure(figsize=(style.width / _DPI, style.height / _DPI), dpi=_DPI)
    if title:
        fig.suptitle(title, fontsize=style.font_size, x=0.02, ha="left", y=0.98)
    ax = _panel_axes(fig, 0, 1, style)
    ax.set_gid("boxplot")
    ax.set_ylabel(y_label, fontsize=style.font_size)
    artists = ax.bxp(
        [_bxp_stats(s, i) for i, s in enumerate(summaries)],
        showfliers=True,
        flierprops={"marker": "o", "markerfacecolor": "none", "markersize": 5},
        medianprops={"linewidth": 2},
    )
    values: list[float] = []
    for s in summaries:
        values += [s.whisker_low, s.whisker_high, *s.outliers]
    ax.set_ylim(*axis_limits(values))
    for i, s in enumerate(summaries):
        color = style.color_for(s.label)
        parts = {
            "box": [artists["boxes"][i]],
            "median": [artists["medians"][i]],
            "whisker": artists["whiskers"][2 * i : 2 * i + 2],
            "cap": artists["caps"][2 * i : 2 * i + 2],
            "fliers": [artists["fliers"][i]],
        }
        for name, lines in parts.items():
            for k, line in enumerate(lines):
                line.set_color(color)
                line.set_markeredgecolor(color)
                line.set_gid(f"{name}{i}" if len(lines) == 1 else f"{name}{i}-{k}")
    return fig


def render_boxplot(
    summaries: Sequence[BoxplotSummary],
    style: PlotStyle | None = None,
    title: str | None = None,
    y_label: str = "",
) -> str:
    return figure_to_svg(boxplot_figure(summaries, style, title, y_label))
