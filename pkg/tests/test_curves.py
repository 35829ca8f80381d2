from __future__ import annotations

import math

import numpy as np
import pytest

from app.curves import (
    Ellipse,
    EllipseOffsetCurve,
    OffsetCurveSpec,
    convexity_check,
    convexity_threshold,
    matched_normal_rate,
    outward_normal,
    planar_curvature,
    planar_offset_curve,
    sample_closed,
    sharp_end_threshold,
)

T = np.linspace(0.0, 2.0 * math.pi, 1000, endpoint=False)


def test_circle_curvature_is_inverse_radius() -> None:
    assert planar_curvature(Ellipse(2.0, 2.0), T) == pytest.approx(np.full(T.shape, 0.5))


def test_ellipse_curvature_at_axis_ends() -> None:
    ellipse = Ellipse(1.0, 3.0)

    assert planar_curvature(ellipse, 0.0) == pytest.approx(1.0 / 9.0)
    assert planar_curvature(ellipse, math.pi / 2) == pytest.approx(3.0)


def test_outward_normal_points_away_from_center() -> None:
    ellipse = Ellipse(1.0, 3.0)

    assert np.sum(outward_normal(ellipse, T) * ellipse.point(T), axis=1).min() > 0.0


@pytest.mark.parametrize("curve", [Ellipse(1.0, 3.0), EllipseOffsetCurve(1.0, 3.0, 0.5)])
def test_analytic_derivatives_match_differences(curve) -> None:
    step = 1e-6
    t = np.array([0.3, 1.7, 4.0])
    for order in (1, 2, 3):
        approx = (curve.derivative(t + step, order - 1) - curve.derivative(t - step, order - 1)) / (2.0 * step)
        assert curve.derivative(t, order) == pytest.approx(approx, rel=1e-6, abs=1e-6)


@pytest.mark.parametrize("k", [0.5, 1.5])
def test_closed_form_matches_curvature_scaled_offset(k: float) -> None:
    closed = EllipseOffsetCurve(1.0, 3.0, k).point(T)
    generic = planar_offset_curve(OffsetCurveSpec.curvature_scaled(Ellipse(1.0, 3.0), k), T)

    assert float(np.max(np.linalg.norm(closed - generic, axis=1))) <= 1e-9


def test_offset_curve_extreme_points() -> None:
    curve = EllipseOffsetCurve(1.0, 3.0, 0.5)

    assert curve.point(0.0) == pytest.approx([5.5, 0.0])
    assert curve.point(math.pi / 2) == pytest.approx([0.0, 3.0 + 0.5 / 3.0])


def test_constant_offset_of_circle_is_circle() -> None:
    points = planar_offset_curve(OffsetCurveSpec.constant(Ellipse(1.0, 1.0), 0.5), T)

    assert np.linalg.norm(points, axis=1) == pytest.approx(np.full(T.shape, 1.5))


def test_offsets_reject_negative_distance() -> None:
    with pytest.raises(ValueError):
        OffsetCurveSpec.constant(Ellipse(1.0, 2.0), -0.5)
    with pytest.raises(ValueError):
        OffsetCurveSpec.curvature_scaled(Ellipse(1.0, 2.0), -0.5)


def test_convexity_is_lost_for_large_k() -> None:
    assert convexity_check(Ellipse(1.0, 3.0)).convex
    assert convexity_check(EllipseOffsetCurve(1.0, 3.0, 0.5)).convex
    small = convexity_check(EllipseOffsetCurve(1.0, 3.0, 1.5))
    assert not small.convex
    assert small.min_curvature < 0.0


def test_convexity_check_needs_enough_samples() -> None:
    with pytest.raises(ValueError):
        convexity_check(Ellipse(1.0, 3.0), grid=10)


def test_convexity_threshold_matches_sharp_end() -> None:
    assert sharp_end_threshold(1.0, 3.0) == pytest.approx(0.6)
    assert sharp_end_threshold(3.0, 1.0) == pytest.approx(0.6)
    assert convexity_threshold(1.0, 3.0) == pytest.approx(0.6, rel=1e-6)


def test_circle_never_loses_convexity() -> None:
    assert sharp_end_threshold(1.0, 1.0) == math.inf
    assert convexity_threshold(1.0, 1.0) == math.inf


@pytest.mark.parametrize("k", [0.5, 1.5])
def test_matched_normal_rate_is_constant(k: float) -> None:
    rates = matched_normal_rate(EllipseOffsetCurve(1.0, 3.0, k), Ellipse(1.0, 3.0), T)

    assert rates == pytest.approx(np.full(T.shape, 1.0 + k), abs=1e-10)


def test_sample_closed_does_not_repeat_start() -> None:
    points = sample_closed(Ellipse(1.0, 3.0), count=8)

    assert points.shape == (8, 2)
    assert not np.allclose(points[0], points[-1])
