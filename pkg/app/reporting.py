from __future__ import annotations

import logging
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
import svgwrite

from app.models import ExperimentReport, ReportRow
from app.utils import FloatArray

logger = logging.getLogger("geodesic_lab")

CSV_COLUMNS = ["label", "measured", "target", "tolerance", "pass"]
STROKES = ("red", "green", "blue")


def _fmt(value: float) -> str:
    return repr(float(value))


def emit_csv(report: ExperimentReport, path: str | Path) -> Path:
    path = Path(path)
    frame = pd.DataFrame(
        [
            {
                "label": row.label,
                "measured": _fmt(row.measured),
                "target": _fmt(row.target),
                "tolerance": _fmt(row.tolerance),
                "pass": "true" if row.passed else "false",
            }
            for row in report.rows
        ],
        columns=CSV_COLUMNS,
    )
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    logger.debug("wrote %d rows to %s", len(frame), path)
    return path


def read_csv(path: str | Path, name: str | None = None) -> ExperimentReport:
    path = Path(path)
    frame = pd.read_csv(
        path,
        dtype={"label": str, "pass": str},
        float_precision="round_trip",
        keep_default_na=False,
    )
    missing = [column for column in CSV_COLUMNS if column not in frame.columns]
    if missing:
        raise ValueError(f"{path} is missing columns: {', '.join(missing)}")
    rows = [
        ReportRow(
            label=record["label"],
            measured=float(record["measured"]),
            target=float(record["target"]),
            tolerance=float(record["tolerance"]),
            passed=str(record["pass"]).strip().lower() == "true",
        )
        for record in frame.to_dict(orient="records")
    ]
    return ExperimentReport(name=name or path.stem, rows=rows)


def _is_closed(points: FloatArray) -> bool:
    span = float(np.max(np.ptp(points, axis=0))) if len(points) else 0.0
    return len(points) > 2 and float(np.linalg.norm(points[0] - points[-1])) <= 0.05 * max(span, 1e-12)


def svg_viewbox(curves: Sequence[FloatArray], margin: float = 0.05) -> tuple[float, float, float, float]:
    stacked = np.concatenate([np.asarray(c, dtype=float) for c in curves])
    lo = stacked.min(axis=0)
    hi = stacked.max(axis=0)
    center = 0.5 * (lo + hi)
    half = 0.5 * float(np.max(hi - lo))
    half = half * (1.0 + margin) if half > 0 else 1.0
    return (float(center[0] - half), float(-center[1] - half), 2.0 * half, 2.0 * half)


def emit_svg(
    curves: Sequence[FloatArray],
    path: str | Path,
    *,
    closed: Sequence[bool] | None = None,
    stroke_width: float | None = None,
) -> Path:
    if not curves:
        raise ValueError("emit_svg needs at least one curve.")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    viewbox = svg_viewbox(curves)
    width = stroke_width or viewbox[2] / 400.0

    drawing = svgwrite.Drawing(str(path), profile="tiny", size=("800px", "800px"))
    drawing.attribs["viewBox"] = " ".join(repr(v) for v in viewbox)
    for index, curve in enumerate(curves):
        points = np.asarray(curve, dtype=float)
        is_closed = closed[index] if closed is not None else _is_closed(points)
        if is_closed and not np.array_equal(points[0], points[-1]):
            points = np.vstack([points, points[:1]])
        drawing.add(
            drawing.polyline(
                points=[(float(x), float(-y)) for x, y in points],
                fill="none",
                stroke=STROKES[index % len(STROKES)],
                stroke_width=width,
            )
        )
    drawing.save()
    logger.debug("wrote %d curves to %s", len(curves), path)
    return path
