import math
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Literal, Sequence, Union

from functions import atomic_write_text
from src.errors import ParseError
from src.logger import get_logger
from src.prepare_data.prepare_metrics_data import PrepareMetricsData

SVG_NS = "http://www.w3.org/2000/svg"
UNIT_CIRCLE_TOLERANCE = 1e-3


class _Canvas:
    """Maps data coordinates onto a fixed-size SVG drawing area."""

    def __init__(self, x_range, y_range, width=640, height=400, margin=48):
        self.width, self.height, self.margin = width, height, margin
        self.x0, self.x1 = self._pad(*x_range)
        self.y0, self.y1 = self._pad(*y_range)
        self.root = ET.Element("svg", {
            "xmlns": SVG_NS,
            "width": str(width),
            "height": str(height),
            "viewBox": f"0 0 {width} {height}",
        })
        ET.SubElement(self.root, "rect", {"width": str(width), "height": str(height), "fill": "white"})

    @staticmethod
    def _pad(low: float, high: float) -> tuple[float, float]:
        if math.isclose(low, high):
            pad = max(abs(low) * 0.1, 0.5)
            return low - pad, high + pad
        return low, high

    def x(self, value: float) -> float:
        span = self.width - 2 * self.margin
        return round(self.margin + (value - self.x0) / (self.x1 - self.x0) * span, 3)

    def y(self, value: float) -> float:
        span = self.height - 2 * self.margin
        return round(self.height - self.margin - (value - self.y0) / (self.y1 - self.y0) * span, 3)

    def polyline(self, xs, ys, **attrs):
        points = " ".join(f"{self.x(a)},{self.y(b)}" for a, b in zip(xs, ys))
        return ET.SubElement(self.root, "polyline", {"points": points, "fill": "none", **attrs})

    def line(self, x1, y1, x2, y2, **attrs):
        return ET.SubElement(self.root, "line", {
            "x1": str(self.x(x1)), "y1": str(self.y(y1)), "x2": str(self.x(x2)), "y2": str(self.y(y2)), **attrs,
        })

    def circle(self, cx, cy, r=3.0, **attrs):
        return ET.SubElement(self.root, "circle", {"cx": str(self.x(cx)), "cy": str(self.y(cy)), "r": str(r), **attrs})

    def text(self, x, y, label, **attrs):
        node = ET.SubElement(self.root, "text", {"x": str(x), "y": str(y), "font-size": "12", **attrs})
        node.text = label
        return node

    def axes(self, x_label: str, y_label: str):
        bottom, left = self.height - self.margin, self.margin
        ET.SubElement(self.root, "line", {"x1": str(left), "y1": str(bottom), "x2": str(self.width - self.margin), "y2": str(bottom), "stroke": "black", "class": "axis"})
        ET.SubElement(self.root, "line", {"x1": str(left), "y1": str(self.margin), "x2": str(left), "y2": str(bottom), "stroke": "black", "class": "axis"})
        self.text(self.width / 2, self.height - 12, x_label, **{"text-anchor": "middle"})
        self.text(12, self.height / 2, y_label, transform=f"rotate(-90 12 {self.height / 2})", **{"text-anchor": "middle"})

    def write(self, path: Union[str, Path]) -> Path:
        ET.indent(self.root)
        return atomic_write_text(path, ET.tostring(self.root, encoding="unicode") + "\n")


class PlotService:
    """
    Отрисовка SVG-графиков: веса балансировки, сферическая PCA-проекция и свип гиперпараметров.
    """

    logger = get_logger(__name__)

    def plot_weights(self, metrics_path: Union[str, Path], out_path: Union[str, Path]) -> Path:
        rows = PrepareMetricsData.read_metrics_csv(metrics_path)
        if not rows:
            raise ParseError(f"{metrics_path}: no metric rows", line=2)
        steps = [row.step for row in rows]
        w = [row.w for row in rows]
        inv_w = [1.0 / value for value in w]
        values = w + inv_w + [1.0]
        canvas = _Canvas((min(steps), max(steps)), (min(values), max(values)))
        canvas.axes("step", "weight")
        canvas.line(min(steps), 1.0, max(steps), 1.0, stroke="grey", **{"stroke-dasharray": "4 4", "class": "reference"})
        canvas.polyline(steps, w, id="w", stroke="crimson", **{"class": "series"})
        canvas.polyline(steps, inv_w, id="inv_w", stroke="steelblue", **{"class": "series"})
        canvas.text(canvas.width - 120, 20, "w (entropy)", fill="crimson")
        canvas.text(canvas.width - 120, 36, "1/w (uniformity)", fill="steelblue")
        return canvas.write(out_path)

    def plot_spca(self, projection_path: Union[str, Path], out_path: Union[str, Path]) -> Path:
        rows = PrepareMetricsData.read_projection_csv(projection_path)
        for index, row in enumerate(rows):
            radius = math.hypot(row.x, row.y)
            if abs(radius - 1.0) > UNIT_CIRCLE_TOLERANCE:
                self.logger.error(f"{projection_path}: point ({row.x}, {row.y}) is off the unit circle")
                raise ParseError(f"{projection_path}: point ({row.x}, {row.y}) has radius {radius}, expected 1", line=index + 2)
        canvas = _Canvas((-1.1, 1.1), (-1.1, 1.1), width=420, height=420, margin=30)
        circle = [2 * math.pi * k / 128 for k in range(129)]
        canvas.polyline([math.cos(t) for t in circle], [math.sin(t) for t in circle], stroke="lightgrey", id="unit_circle")
        colours = {"image": "steelblue", "text": "crimson"}
        for row in rows:
            canvas.circle(row.x, row.y, r=2.5 if row.set == "image" else 5.0, fill=colours[row.set], **{"class": row.set})
        return canvas.write(out_path)

    def plot_sweep(self, sweep_path: Union[str, Path], out_path: Union[str, Path]) -> Path:
        rows = PrepareMetricsData.read_sweep_csv(sweep_path)
        if not rows:
            raise ParseError(f"{sweep_path}: no sweep rows", line=2)
        rows = sorted(rows, key=lambda row: row.value)
        xs = [row.value for row in rows]
        low = min(row.mean - row.std for row in rows)
        high = max(row.mean + row.std for row in rows)
        canvas = _Canvas((min(xs), max(xs)), (low, high))
        canvas.axes("value", "mean accuracy")
        canvas.polyline(xs, [row.mean for row in rows], stroke="steelblue", **{"class": "trend"})
        for row in rows:
            canvas.line(row.value, row.mean - row.std, row.value, row.mean + row.std, stroke="black", **{"class": "errorbar"})
            canvas.circle(row.value, row.mean, r=4.0, fill="steelblue", **{"class": "point"})
        return canvas.write(out_path)

    def plot(self, what: Literal["weights", "spca", "sweep"], inputs: Sequence[Union[str, Path]], out_dir: Union[str, Path]) -> list[Path]:
        handler = {"weights": self.plot_weights, "spca": self.plot_spca, "sweep": self.plot_sweep}[what]
        outputs = []
        for source in inputs:
            source = Path(source)
            target = Path(out_dir) / f"{source.stem}_{what}.svg"
            outputs.append(handler(source, target))
            self.logger.info(f"Plotted {what} from {source} to {target}")
        return outputs
