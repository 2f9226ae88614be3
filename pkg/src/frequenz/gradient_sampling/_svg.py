# License: MIT
# Copyright © 2024 Frequenz Energy-as-a-Service GmbH

"""SVG plots of fitted quantile curves."""

import logging
import pathlib
from xml.sax.saxutils import escape

from .panel import SalesPanel
from .qam import QuantileSurface

_logger = logging.getLogger(__name__)

_MARGIN = 40.0


class SvgCanvas:
    """An SVG document built element by element."""

    def __init__(self, width: float, height: float) -> None:
        """Initialize this canvas.

        Args:
            width: The width of the drawing, in pixels.
            height: The height of the drawing, in pixels.
        """
        self._parts: list[str] = [
            '<?xml version="1.0" standalone="no"?>\n',
            f'<svg version="1.1" width="{width:g}" height="{height:g}" '
            f'viewBox="0 0 {width:g} {height:g}" xmlns="http://www.w3.org/2000/svg">\n',
            f'<rect x="0" y="0" width="{width:g}" height="{height:g}" fill="white"/>\n',
        ]

    def line(  # pylint: disable=too-many-arguments
        self, x1: float, y1: float, x2: float, y2: float, stroke: str = "black"
    ) -> None:
        """Draw a straight line.

        Args:
            x1: The horizontal coordinate of the start.
            y1: The vertical coordinate of the start.
            x2: The horizontal coordinate of the end.
            y2: The vertical coordinate of the end.
            stroke: The color of the line.
        """
        self._parts.append(
            f'<line x1="{x1:.1f}" y1="{y1:.1f}" x2="{x2:.1f}" y2="{y2:.1f}" '
            f'stroke="{stroke}"/>\n'
        )

    def circle(self, x: float, y: float, radius: float, fill: str) -> None:
        """Draw a filled circle.

        Args:
            x: The horizontal coordinate of the center.
            y: The vertical coordinate of the center.
            radius: The radius.
            fill: The fill color.
        """
        self._parts.append(
            f'<circle cx="{x:.1f}" cy="{y:.1f}" r="{radius:g}" fill="{fill}" '
            'fill-opacity="0.5"/>\n'
        )

    def polyline(self, points: list[tuple[float, float]], stroke: str) -> None:
        """Draw connected line segments.

        Args:
            points: The vertices, in drawing order.
            stroke: The color of the line.
        """
        coordinates = " ".join(f"{x:.1f},{y:.1f}" for x, y in points)
        self._parts.append(
            f'<polyline points="{coordinates}" fill="none" stroke="{stroke}" '
            'stroke-width="2"/>\n'
        )

    def text(self, x: float, y: float, content: str, anchor: str = "start") -> None:
        """Write a label.

        Args:
            x: The horizontal coordinate of the anchor.
            y: The vertical coordinate of the baseline.
            content: The text, it is escaped.
            anchor: The SVG text anchor.
        """
        self._parts.append(
            f'<text x="{x:.1f}" y="{y:.1f}" font-family="sans-serif" font-size="12" '
            f'text-anchor="{anchor}">{escape(content)}</text>\n'
        )

    def get_svg(self) -> str:
        """Return the finished document.

        Returns:
            The SVG source.
        """
        return "".join(self._parts) + "</svg>\n"


def render_day_plot(
    panel: SalesPanel,
    surface: QuantileSurface,
    j: int,
    *,
    width: float = 480.0,
    height: float = 320.0,
) -> str:
    """Plot the sales of a day class with its fitted quantile curve.

    Args:
        panel: The observed sales.
        surface: The fitted surface.
        j: The day class.
        width: The width of the drawing, in pixels.
        height: The height of the drawing, in pixels.

    Returns:
        The SVG source.
    """
    points = [
        (t, value)
        for (t, day), values in panel.cells.items()
        if day == j
        for value in values
    ]
    curve = [(t, surface.grid[(t, j)]) for t in surface.hours(j)]
    hours = [t for t, _ in points + curve] or [1]
    values = [value for _, value in points + curve] or [0.0]
    t_low, t_high = min(hours) - 0.5, max(hours) + 0.5
    y_low, y_high = min(0.0, min(values)), max(values) * 1.05 or 1.0

    def to_canvas(t: float, value: float) -> tuple[float, float]:
        x = _MARGIN + (t - t_low) / (t_high - t_low) * (width - 2 * _MARGIN)
        scale = (height - 2 * _MARGIN) / (y_high - y_low)
        y = height - _MARGIN - (value - y_low) * scale
        return x, y

    canvas = SvgCanvas(width, height)
    canvas.line(_MARGIN, height - _MARGIN, width - _MARGIN, height - _MARGIN)
    canvas.line(_MARGIN, _MARGIN, _MARGIN, height - _MARGIN)
    for t in sorted(set(hours)):
        x, _ = to_canvas(t, y_low)
        canvas.text(x, height - _MARGIN + 16, str(t), anchor="middle")
    canvas.text(_MARGIN - 4, height - _MARGIN, f"{y_low:g}", anchor="end")
    canvas.text(_MARGIN - 4, _MARGIN, f"{y_high:.3g}", anchor="end")
    for t, value in points:
        canvas.circle(*to_canvas(t, value), radius=2.0, fill="gray")
    canvas.polyline([to_canvas(t, value) for t, value in curve], stroke="firebrick")
    title = f"day class {j}, {surface.alpha:g}-quantile"
    canvas.text(width / 2, _MARGIN / 2, title, anchor="middle")
    return canvas.get_svg()


def write_day_plots(
    panel: SalesPanel, surface: QuantileSurface, directory: pathlib.Path
) -> list[pathlib.Path]:
    """Write one plot per fitted day class.

    Args:
        panel: The observed sales.
        surface: The fitted surface.
        directory: Where to write the `day_<j>.svg` files.

    Returns:
        The written files, by day class.
    """
    directory.mkdir(parents=True, exist_ok=True)
    written: list[pathlib.Path] = []
    for j in surface.day_classes:
        path = directory / f"day_{j}.svg"
        path.write_text(render_day_plot(panel, surface, j), encoding="utf-8")
        written.append(path)
    _logger.debug("Wrote %d plots to %s", len(written), directory)
    return written
