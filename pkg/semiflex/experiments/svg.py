import os
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
from numpy.typing import NDArray

from semiflex.errors import IOFailure

WIDTH = 800
HEIGHT = 400
MARGIN = 40
MAX_POINTS = 2000
COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"]

Series = Tuple[str, NDArray[np.float64], NDArray[np.float64]]


def _thin(x: NDArray[np.float64], y: NDArray[np.float64]) -> Tuple[NDArray, NDArray]:
    if len(x) <= MAX_POINTS:
        return x, y
    keep = np.unique(np.linspace(0, len(x) - 1, MAX_POINTS).round().astype(np.int64))
    return x[keep], y[keep]


def render_polylines(series: Sequence[Series], title: str = "") -> str:
    r"""An SVG document with one polyline per ``(label, x, y)`` series,
    sharing axes."""
    if len(series) == 0:
        raise ValueError("Nothing to plot.")
    xs = np.concatenate([np.asarray(s[1], dtype=np.float64) for s in series])
    ys = np.concatenate([np.asarray(s[2], dtype=np.float64) for s in series])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    sx = (WIDTH - 2 * MARGIN) / ((x1 - x0) or 1.0)
    sy = (HEIGHT - 2 * MARGIN) / ((y1 - y0) or 1.0)

    lines: List[str] = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{MARGIN}" y="{MARGIN // 2}" font-size="14">{title}</text>',
    ]
    if y0 < 0 < y1:
        zero = HEIGHT - MARGIN - (0.0 - y0) * sy
        lines.append(
            f'<line x1="{MARGIN}" y1="{zero:.2f}" x2="{WIDTH - MARGIN}" y2="{zero:.2f}" '
            f'stroke="#999" stroke-width="0.5"/>'
        )
    for i, (label, x, y) in enumerate(series):
        x, y = _thin(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
        px = MARGIN + (x - x0) * sx
        py = HEIGHT - MARGIN - (y - y0) * sy
        points = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        color = COLORS[i % len(COLORS)]
        lines.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1" points="{points}"/>'
        )
        lines.append(
            f'<text x="{WIDTH - MARGIN - 160}" y="{MARGIN + 16 * (i + 1)}" '
            f'font-size="12" fill="{color}">{label}</text>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def write_svg(path: Union[str, os.PathLike], series: Sequence[Series], title: str = "") -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(render_polylines(series, title))
    except OSError as e:
        raise IOFailure(f"Could not write figure to '{path}': {e}") from e
