from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from app.config import Settings
from app.curves import Ellipse
from app.errors import OutOfDomainError
from app.experiments import (
    RUNNERS,
    ExperimentContext,
    ExperimentService,
    ReportAccumulator,
    capped_length,
    capped_minimizer,
    exp_capped_cylinder,
    exp_ellipse_foliation,
    exp_geodesic_limit,
    exp_offset_curvature,
    exp_preservation_sphere_cylinder,
    exp_projected_expansion,
    exp_projection_consistency,
    exp_rigidity_residual,
    exp_round_cylinder,
    horizontal_rate,
    seam_slopes,
)
from app.models import ComparisonMode, ExperimentName, RunConfig
from app.surfaces import EllipticCylinderPatch


def _settings(**overrides) -> Settings:
    values = dict(random_geodesics=2, curve_nodes=81, footpoint_grid=32, convexity_grid=400)
    values.update(overrides)
    return Settings(**values)


def _context(tmp_path: Path | None = None, **overrides) -> ExperimentContext:
    context = ExperimentContext(settings=_settings(**overrides), rng=np.random.default_rng(42))
    if tmp_path is not None:
        context.out_dir = tmp_path
    return context


def _describe_failures(report) -> str:
    return "; ".join(f"{r.label}: {r.measured!r} vs {r.target!r} (tol {r.tolerance!r})" for r in report.failed_rows)


def test_accumulator_comparison_modes() -> None:
    acc = ReportAccumulator(name="demo")

    assert acc.absolute("abs", 1.05, 1.0, 0.1).passed
    assert not acc.absolute("abs_far", 1.2, 1.0, 0.1).passed
    assert acc.relative("rel", 101.0, 100.0, 0.02).passed
    assert acc.relative("rel_small", 0.005, 0.0, 0.01).passed
    assert acc.at_least("order", 1.9, 1.0).passed
    assert not acc.at_least("order_low", 0.8, 1.0).passed
    assert acc.at_least("order_inf", math.inf, 1.0).passed
    assert not acc.absolute("nan", math.nan, 0.0, 1.0).passed


def test_accumulator_applies_overrides_by_sanitized_label() -> None:
    acc = ReportAccumulator(name="demo", overrides={"a=1;r=1": 0.5})

    row = acc.relative("a=1,r=1", 0.8, 0.5, 1e-6)

    assert row.label == "a=1;r=1"
    assert row.tolerance == 0.5
    assert row.passed


def test_accumulator_builds_report_with_unique_warnings() -> None:
    acc = ReportAccumulator(name="demo")
    acc.absolute("x", 0.0, 0.0, 0.0)
    acc.warn("twice")
    acc.warn("twice")
    acc.artifacts.append("demo.svg")

    report = acc.build(took_ms=3)

    assert report.name == "demo"
    assert report.warnings == ["twice"]
    assert report.artifacts == ["demo.svg"]
    assert report.took_ms == 3
    assert report.passed


def test_every_experiment_has_a_runner() -> None:
    assert set(RUNNERS) == set(ExperimentName)


def test_offset_curvature_report() -> None:
    report = exp_offset_curvature(context=_context())

    assert report.passed, _describe_failures(report)
    assert len(report.rows) == 16
    assert report.row("a=1;r=1").measured == pytest.approx(0.5)
    assert report.row("a=2;r=0.5").target == pytest.approx(1.0)


def test_geodesic_limit_report() -> None:
    report = exp_geodesic_limit(context=_context())

    assert report.passed, _describe_failures(report)
    assert report.row("a1=1;a2=2;h=0;limit").measured == pytest.approx(-2.0, rel=1e-2)


def test_sphere_cylinder_preservation_report() -> None:
    report = exp_preservation_sphere_cylinder(context=_context())

    assert report.passed, _describe_failures(report)
    assert report.row("sphere;max_kappa_g").measured < 1e-6
    assert report.row("control;max_kappa_g").measured > 0.01


def test_projected_expansion_report() -> None:
    report = exp_projected_expansion(context=_context())

    assert report.passed, _describe_failures(report)
    assert report.row("h=0;x2=0.025;u1_dot").measured == pytest.approx(1.5, rel=0.05)
    assert report.row("h=0;x2=0.025;u2/x2").measured == pytest.approx(2.0, rel=0.05)
    assert report.row("h=0;x2=0.025;u2_ddot/x2").measured == pytest.approx(-5.0, rel=0.05)
    assert report.row("h=x1^2x2^2;x2=0.025;u2_ddot/x2").measured == pytest.approx(-3.0, rel=0.05)


def test_rigidity_residual_report() -> None:
    report = exp_rigidity_residual(context=_context())

    assert report.passed, _describe_failures(report)
    assert report.row("generic;limit").measured == pytest.approx(-2.0, rel=0.05)
    assert report.row("swapped;limit").measured == pytest.approx(-1.0, rel=0.05)
    for name in ("sphere", "cylinder"):
        row = report.row(f"{name};finest")
        assert row.measured <= row.tolerance


def test_round_cylinder_report() -> None:
    report = exp_round_cylinder(context=_context())

    assert report.passed, _describe_failures(report)
    assert report.row("circle;spread").measured == pytest.approx(0.0, abs=1e-8)
    assert report.row("ellipse;t=0;ratio").target == pytest.approx(1.0 + 1.0 / 9.0)
    assert report.row("ellipse;t=pi/2;ratio").target == pytest.approx(4.0)


def test_round_cylinder_accepts_custom_profile() -> None:
    report = exp_round_cylinder(Ellipse(2.0, 1.0), r=0.5, context=_context())

    assert report.passed, _describe_failures(report)
    assert {row.label for row in report.rows} >= {"profile;t=0;ratio", "profile;spread"}


def test_horizontal_rate_is_constant_only_for_circles() -> None:
    t = np.linspace(0.0, 2.0 * math.pi, 16, endpoint=False)

    circle = horizontal_rate(EllipticCylinderPatch(Ellipse(1.0, 1.0)), 1.0, t)
    ellipse = horizontal_rate(EllipticCylinderPatch(Ellipse(1.0, 3.0)), 1.0, t)

    assert circle == pytest.approx(np.full(16, 2.0))
    assert float(np.ptp(ellipse)) > 1.0


def test_capped_length_and_minimizer_at_unit_scale() -> None:
    assert capped_length(math.pi / 2, 1.0) == pytest.approx(math.pi / math.sqrt(2) + math.pi / 2, abs=1e-12)
    assert capped_minimizer(1.0) == pytest.approx(math.pi / 2, abs=1e-10)


def test_capped_minimizer_solves_stationarity() -> None:
    theta = capped_minimizer(1.2)
    c = math.pi / 2.4

    assert theta == pytest.approx(1.2365, abs=1e-3)
    assert theta - c * math.sin(theta) == pytest.approx(0.0, abs=1e-12)


def test_capped_minimizer_is_zero_without_interior_stationary_point() -> None:
    assert capped_minimizer(2.0) == pytest.approx(0.0, abs=1e-3)


@pytest.mark.parametrize("r", [1.0, 1.2, 2.0])
def test_seam_slopes_at_quarter_turn(r: float) -> None:
    sphere, cylinder = seam_slopes(r, math.pi / 2)

    assert sphere == pytest.approx(1.0)
    assert cylinder == pytest.approx(1.0 / r)


def test_seam_slopes_match_at_minimizer() -> None:
    sphere, cylinder = seam_slopes(1.2, capped_minimizer(1.2))

    assert sphere == pytest.approx(cylinder, abs=1e-8)


def test_capped_cylinder_report_at_unit_scale() -> None:
    report = exp_capped_cylinder(1.0, context=_context())

    assert report.passed, _describe_failures(report)
    assert report.row("theta_star").measured == pytest.approx(math.pi / 2, abs=1e-10)
    assert report.row("length_at_theta_star").measured == pytest.approx(math.pi / math.sqrt(2) + math.pi / 2, abs=1e-9)
    assert report.row("slope_mismatch").measured == pytest.approx(0.0, abs=1e-9)


def test_capped_cylinder_report_off_unit_scale() -> None:
    report = exp_capped_cylinder(1.2, context=_context())

    assert report.passed, _describe_failures(report)
    assert report.row("theta_star").target == pytest.approx(1.2365, abs=1e-3)
    assert report.row("slope_mismatch").measured == pytest.approx(1.0 - 1.0 / 1.2, abs=1e-9)


def test_capped_cylinder_rejects_small_scale() -> None:
    with pytest.raises(OutOfDomainError):
        exp_capped_cylinder(0.5, context=_context())


def test_ellipse_foliation_report(tmp_path) -> None:
    context = _context(tmp_path)
    context.plot = True

    report = exp_ellipse_foliation(context=context)

    assert report.passed, _describe_failures(report)
    assert report.row("k_star").measured == pytest.approx(0.6, rel=1e-6)
    assert report.row("k=0.5;C(0).x").measured == pytest.approx(5.5)
    assert report.row("k=1.5;multi_valued").measured == 1.0
    assert report.row("k=0.5;convex").measured == 1.0
    assert report.artifacts == ["ellipse-foliation.svg"]
    assert (tmp_path / "ellipse-foliation.svg").exists()
    assert any("not single-valued" in warning for warning in report.warnings)


def test_ellipse_foliation_skips_svg_without_plot(tmp_path) -> None:
    report = exp_ellipse_foliation(context=_context(tmp_path))

    assert report.artifacts == []
    assert not (tmp_path / "ellipse-foliation.svg").exists()


def test_projection_consistency_report() -> None:
    report = exp_projection_consistency(samples=3, context=_context())

    assert report.passed, _describe_failures(report)
    assert report.row("sphere;distance").measured == pytest.approx(4.0)
    assert report.row("line_oblique;max_kappa_g").measured == pytest.approx(0.1225, abs=0.01)


def test_service_reseeds_each_experiment(tmp_path) -> None:
    service = ExperimentService(_settings())
    config = RunConfig(experiment="sphere-cylinder-preservation", out_dir=tmp_path, seed=7)

    first = service.run(config)
    second = service.run(config)

    assert [row.measured for row in first[0].rows] == [row.measured for row in second[0].rows]


def test_service_passes_scale_to_capped_cylinder(tmp_path) -> None:
    service = ExperimentService(_settings())

    report = service.run_one(ExperimentName.capped_cylinder, RunConfig(out_dir=tmp_path, r=1.2))

    assert report.row("theta_star").target == pytest.approx(1.2365, abs=1e-3)


def test_sphere_cylinder_preservation_passes_with_default_settings() -> None:
    context = ExperimentContext(settings=Settings(random_geodesics=3), rng=np.random.default_rng(5))

    report = exp_preservation_sphere_cylinder(context=context)

    assert report.passed, _describe_failures(report)
    assert report.row("sphere;max_kappa_g").measured < 1e-6
    assert report.row("cylinder;max_kappa_g").measured < 1e-6


def test_ellipse_foliation_with_wide_ellipse_flags_multi_valued_projection() -> None:
    report = exp_ellipse_foliation(3.0, 1.0, (0.5, 1.5), context=_context())

    assert report.passed, _describe_failures(report)
    assert report.row("k_star").measured == pytest.approx(0.6, rel=1e-6)
    assert report.row("k=1.5;multi_valued").measured == 1.0
    assert any("not single-valued" in warning for warning in report.warnings)


def test_accumulator_tags_rows_with_comparison_mode() -> None:
    acc = ReportAccumulator(name="demo")

    assert acc.absolute("abs", 0.0, 0.0, 0.0).mode == ComparisonMode.absolute
    assert acc.relative("rel", 100.5, 100.0, 0.01).mode == ComparisonMode.relative
    assert acc.at_least("order", 2.0, 1.0).mode == ComparisonMode.at_least
    row = acc.compare("rel_direct", 100.5, 100.0, 0.01, ComparisonMode.relative)
    assert row.passed
    assert not acc.compare("abs_direct", 100.5, 100.0, 0.01).passed


def test_projection_consistency_checks_derivatives_at_configured_step() -> None:
    report = exp_projection_consistency(samples=3, context=_context())

    for name in ("graph", "sphere", "cylinder", "elliptic", "capped", "offset"):
        assert report.row(f"{name};derivatives").passed
        assert report.row(f"{name};derivatives").tolerance == 1e-6
    assert report.row("offset;christoffel").passed


def test_projection_consistency_honors_derivative_tolerance_setting() -> None:
    report = exp_projection_consistency(samples=3, context=_context(fd_rel_tolerance=1e-14))

    row = report.row("sphere;derivatives")
    assert row.tolerance == 1e-14
    assert not row.passed
