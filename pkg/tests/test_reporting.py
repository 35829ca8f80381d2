from __future__ import annotations

import re

import numpy as np
import pytest

from app.curves import Ellipse, EllipseOffsetCurve, sample_closed
from app.models import ExperimentReport, ReportRow
from app.reporting import CSV_COLUMNS, emit_csv, emit_svg, read_csv, svg_viewbox


def _report(*rows: ReportRow) -> ExperimentReport:
    return ExperimentReport(name="offset-curvature", rows=list(rows))


def _row(label: str, measured: float, target: float, tolerance: float = 1e-6, passed: bool = True) -> ReportRow:
    return ReportRow(label=label, measured=measured, target=target, tolerance=tolerance, passed=passed)


def test_csv_format(tmp_path) -> None:
    path = emit_csv(_report(_row("a=1,r=1", 0.5, 0.5)), tmp_path / "offset-curvature.csv")

    assert path.read_bytes() == b"label,measured,target,tolerance,pass\na=1;r=1,0.5,0.5,1e-06,true\n"


def test_empty_report_writes_header_only(tmp_path) -> None:
    path = emit_csv(_report(), tmp_path / "empty.csv")

    assert path.read_text(encoding="utf-8") == ",".join(CSV_COLUMNS) + "\n"


def test_csv_round_trip_is_lossless(tmp_path) -> None:
    report = _report(
        _row("sum", 0.1 + 0.2, 0.3, 1e-15, passed=False),
        _row("NA", 1.0 / 3.0, 2.0 / 3.0, 0.5),
        _row("tiny", 5e-324, 0.0, 0.0),
        _row("theta_star", 1.2365, 1.2365000000000002, 1e-3),
    )
    path = emit_csv(report, tmp_path / "report.csv")

    parsed = read_csv(path, "offset-curvature")

    assert parsed.rows == report.rows
    assert parsed.name == "offset-curvature"


def test_read_csv_defaults_name_to_file_stem(tmp_path) -> None:
    path = emit_csv(_report(_row("x", 1.0, 1.0)), tmp_path / "capped-cylinder.csv")

    assert read_csv(path).name == "capped-cylinder"


def test_read_csv_rejects_missing_columns(tmp_path) -> None:
    path = tmp_path / "broken.csv"
    path.write_text("label,measured\nx,1.0\n", encoding="utf-8")

    with pytest.raises(ValueError):
        read_csv(path)


def test_viewbox_has_margin_and_equal_aspect() -> None:
    circles = [sample_closed(Ellipse(1.0, 1.0)), sample_closed(Ellipse(2.0, 2.0))]

    min_x, min_y, width, height = svg_viewbox(circles)

    assert (min_x, min_y) == pytest.approx((-2.1, -2.1), abs=1e-9)
    assert width == pytest.approx(4.2, abs=1e-9)
    assert height == width


def test_svg_has_one_polyline_per_curve_in_stroke_order(tmp_path) -> None:
    curves = [sample_closed(Ellipse(1.0, 3.0))] + [sample_closed(EllipseOffsetCurve(1.0, 3.0, k)) for k in (0.5, 1.5)]

    path = emit_svg(curves, tmp_path / "ellipse-foliation.svg")
    text = path.read_text(encoding="utf-8")

    polylines = re.findall(r"<polyline[^>]*>", text)
    assert len(polylines) == 3
    for polyline, color in zip(polylines, ("red", "green", "blue")):
        assert f'stroke="{color}"' in polyline
    assert "viewBox=" in text


def test_closed_curve_repeats_first_point(tmp_path) -> None:
    circle = sample_closed(Ellipse(1.0, 1.0), count=16)

    text = emit_svg([circle], tmp_path / "circle.svg", closed=[True]).read_text(encoding="utf-8")

    points = re.search(r'points="([^"]*)"', text).group(1).split()
    assert len(points) == 17
    assert points[0] == points[-1]


def test_svg_flips_y_axis(tmp_path) -> None:
    segment = np.array([[0.0, 0.0], [0.0, 1.0]])

    text = emit_svg([segment], tmp_path / "segment.svg", closed=[False]).read_text(encoding="utf-8")

    points = re.search(r'points="([^"]*)"', text).group(1).split()
    assert [float(v) for v in points[-1].split(",")] == pytest.approx([0.0, -1.0])


def test_svg_needs_a_curve(tmp_path) -> None:
    with pytest.raises(ValueError):
        emit_svg([], tmp_path / "none.svg")
