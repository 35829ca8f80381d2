from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from app.config import Settings, get_settings
from app.curves import (
    Ellipse,
    EllipseOffsetCurve,
    OffsetCurveSpec,
    PlanarCurve,
    convexity_check,
    convexity_threshold,
    matched_normal_rate,
    planar_curvature,
    planar_offset_curve,
    sample_closed,
    sharp_end_threshold,
)
from app.errors import OutOfDomainError
from app.fields import PolynomialField, ScalarField3, SwappedField, ZeroField
from app.geodesics import (
    GeodesicState,
    IntegratorOptions,
    SampledCurve,
    geodesic_ratio_limit,
    geodesic_rhs,
    integrate_geodesic,
    max_geodesic_curvature,
    random_geodesics,
)
from app.models import ComparisonMode, ExperimentName, ExperimentReport, ReportRow, RunConfig
from app.projection import (
    FootPointOptions,
    foot_point,
    inverse_consistency,
    line_projection,
    normal_angle,
    offset_curvature_law,
    offset_surface,
    project_curve,
)
from app.reporting import emit_svg
from app.surfaces import (
    CappedCylinderPatch,
    ChristoffelMethod,
    EllipticCylinderPatch,
    GraphPatch,
    OffsetPatch,
    RoundCylinderPatch,
    SpherePatch,
    SurfacePatch,
    check_derivatives,
    christoffel,
    cylinder_graph,
    evaluate,
    fundamental_forms,
    principal_curvatures,
    sphere_graph,
)
from app.utils import (
    error_order,
    is_monotone,
    observed_order,
    relative_mismatch,
    richardson_extrapolate,
    sanitize_label,
    stencil_first,
    stencil_second,
)

logger = logging.getLogger("geodesic_lab")

X2_LADDER = (0.1, 0.05, 0.025)


@dataclass
class ReportAccumulator:
    name: str
    overrides: dict[str, float] = field(default_factory=dict)
    rows: list[ReportRow] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    artifacts: list[str] = field(default_factory=list)

    def _tolerance(self, label: str, tolerance: float) -> float:
        return self.overrides.get(sanitize_label(label), tolerance)

    def compare(
        self,
        label: str,
        measured: float,
        target: float,
        tolerance: float,
        mode: ComparisonMode = ComparisonMode.absolute,
    ) -> ReportRow:
        tolerance = self._tolerance(label, tolerance)
        measured, target = float(measured), float(target)
        row = ReportRow(
            label=label,
            measured=measured,
            target=target,
            tolerance=float(tolerance),
            passed=mode.accepts(measured, target, tolerance),
            mode=mode,
        )
        self.rows.append(row)
        logger.debug("  %-40s %s  %-8s measured=%.10g target=%.10g tol=%.1e", row.label,
                     "pass" if row.passed else "FAIL", mode.value, row.measured, row.target, row.tolerance)
        return row

    def absolute(self, label: str, measured: float, target: float, tolerance: float) -> ReportRow:
        return self.compare(label, measured, target, tolerance, ComparisonMode.absolute)

    def relative(self, label: str, measured: float, target: float, tolerance: float) -> ReportRow:
        """|m - t| <= tolerance · max(|t|, 1)."""
        return self.compare(label, measured, target, tolerance, ComparisonMode.relative)

    def at_least(self, label: str, measured: float, bound: float, tolerance: float = 0.0) -> ReportRow:
        return self.compare(label, measured, bound, tolerance, ComparisonMode.at_least)

    def warn(self, message: str) -> None:
        logger.warning("  %s", message)
        self.warnings.append(message)

    def build(self, *, took_ms: int) -> ExperimentReport:
        return ExperimentReport(
            name=self.name,
            rows=list(self.rows),
            artifacts=list(dict.fromkeys(self.artifacts)),
            warnings=list(dict.fromkeys(self.warnings)),
            took_ms=took_ms,
        )


@dataclass
class ExperimentContext:
    settings: Settings
    rng: np.random.Generator
    out_dir: Path = Path("results")
    plot: bool = False
    tol_overrides: dict[str, float] = field(default_factory=dict)

    @classmethod
    def default(cls, seed: int | None = None) -> ExperimentContext:
        settings = get_settings()
        return cls(settings=settings, rng=np.random.default_rng(settings.seed if seed is None else seed))

    def accumulator(self, name: ExperimentName) -> ReportAccumulator:
        return ReportAccumulator(name=name.value, overrides=dict(self.tol_overrides))

    @property
    def footpoint(self) -> FootPointOptions:
        return FootPointOptions.from_settings(self.settings)


def _finish(acc: ReportAccumulator, started: float) -> ExperimentReport:
    return acc.build(took_ms=int((time.perf_counter() - started) * 1000))


# ── offset curvature ───────────────────────────────────────────


def exp_offset_curvature(*, context: ExperimentContext | None = None) -> ExperimentReport:
    ctx = context or ExperimentContext.default()
    started = time.perf_counter()
    acc = ctx.accumulator(ExperimentName.offset_curvature)
    origin = np.zeros(2)
    for a in (0.0, 0.5, 1.0, 2.0):
        for r in (0.25, 0.5, 1.0, 2.0):
            offset = offset_surface(GraphPatch(a, 0.0), r)
            measured = principal_curvatures(offset, origin).k1
            acc.relative(f"a={a:g},r={r:g}", measured, offset_curvature_law(a, r), 1e-6)
    return _finish(acc, started)


# ── geodesic preservation on round pairs ───────────────────────


def _preservation_max(
    outer: SurfacePatch,
    inner: SurfacePatch,
    curves: Sequence[SampledCurve],
    ctx: ExperimentContext,
    acc: ReportAccumulator,
) -> float:
    worst = 0.0
    for curve in curves:
        if curve.exit_reason:
            acc.warn(f"{type(outer).__name__} geodesic truncated: {curve.exit_reason}")
        projected = project_curve(curve, inner, options=ctx.footpoint)
        if projected.multi_valued:
            acc.warn(f"projection onto {type(inner).__name__} is not single-valued")
        worst = max(worst, max_geodesic_curvature(inner, projected))
    return worst


def exp_preservation_sphere_cylinder(*, context: ExperimentContext | None = None) -> ExperimentReport:
    ctx = context or ExperimentContext.default()
    started = time.perf_counter()
    acc = ctx.accumulator(ExperimentName.sphere_cylinder_preservation)
    options = IntegratorOptions.from_settings(ctx.settings, stencil=True)
    count = ctx.settings.random_geodesics

    sphere_box = (np.array([-math.pi, -0.5]), np.array([math.pi, 0.5]))
    outer_sphere = SpherePatch(2.0)
    curves = random_geodesics(outer_sphere, count, ctx.rng, 0.8, box=sphere_box, options=options)
    acc.absolute("sphere,max_kappa_g", _preservation_max(outer_sphere, SpherePatch(1.0), curves, ctx, acc), 0.0, 1e-6)

    outer_cylinder = RoundCylinderPatch(3.0)
    curves = random_geodesics(outer_cylinder, count, ctx.rng, 0.8, options=options)
    acc.absolute(
        "cylinder,max_kappa_g", _preservation_max(outer_cylinder, RoundCylinderPatch(1.0), curves, ctx, acc), 0.0, 1e-6
    )

    # a generic pair: the projected geodesic must bend
    base = GraphPatch(1.0, 2.0)
    outer = OffsetPatch(base, 0.5)
    control = integrate_geodesic(outer, GeodesicState((-0.25, 0.1), (1.0, 0.0)), 0.5, options=options)
    acc.at_least("control,max_kappa_g", _preservation_max(outer, base, [control], ctx, acc), 0.01)
    return _finish(acc, started)


# ── the ratio limit ẍ₂/(ẋ₁² x₂) ───────────────────────────────


def exp_geodesic_limit(*, context: ExperimentContext | None = None) -> ExperimentReport:
    ctx = context or ExperimentContext.default()
    started = time.perf_counter()
    acc = ctx.accumulator(ExperimentName.geodesic_limit)
    cases: list[tuple[str, float, float, ScalarField3]] = [
        ("a1=1,a2=2,h=0", 1.0, 2.0, ZeroField()),
        ("a1=1,a2=1,h=x1^2x2^2/4", 1.0, 1.0, PolynomialField.quartic_cross(0.25)),
        ("a1=0,a2=3,h=0", 0.0, 3.0, ZeroField()),
    ]
    for label, a1, a2, h in cases:
        estimate = geodesic_ratio_limit(a1, a2, h, X2_LADDER)
        if estimate.extrapolated is None:
            acc.warn(f"{label}: ratio ladder not monotone, no extrapolation")
        measured = math.nan if estimate.extrapolated is None else estimate.extrapolated
        acc.relative(f"{label},limit", measured, -a1 * a2, 1e-2)
        acc.at_least(f"{label},order", estimate.fit_order, 1.0)
    return _finish(acc, started)


# ── projected-curve expansion and rigidity residual ────────────


@dataclass(frozen=True)
class ProjectedJet:
    """Derivatives at t = 0 of the offset image of the geodesic through (0, x2) with velocity (1, 0)."""

    x2: float
    u1_dot: float
    u2: float
    u2_ddot: float


def projected_jet(base: GraphPatch, r: float, x2: float, settings: Settings) -> ProjectedJet:
    step = settings.stencil_step
    options = IntegratorOptions(tol=settings.stencil_integrator_tol, nodes=3)
    ahead = integrate_geodesic(base, GeodesicState((0.0, x2), (1.0, 0.0)), 2.0 * step, options=options)
    behind = integrate_geodesic(base, GeodesicState((0.0, x2), (-1.0, 0.0)), 2.0 * step, options=options)
    params = np.vstack([behind.u[:0:-1], ahead.u])
    image = OffsetPatch(base, r).point(params)[:, :2]
    return ProjectedJet(
        x2=x2,
        u1_dot=float(stencil_first(image[:, 0], step)),
        u2=float(image[2, 1]),
        u2_ddot=float(stencil_second(image[:, 1], step)),
    )


def _second_time_derivative_of_h2(base: GraphPatch, x2: float) -> float:
    """d²/dt² of ∂₂h along the geodesic through (0, x2) with velocity (1, 0), at t = 0."""
    u = np.array([0.0, x2])
    v = np.array([1.0, 0.0])
    accel = geodesic_rhs(base, GeodesicState(u, v))[2:]
    third = base.h.third(u)[:, :, 1]
    hess = base.h.hessian(u)[:, 1]
    return float(v @ third @ v + hess @ accel)


def exp_projected_expansion(*, r: float = 0.5, context: ExperimentContext | None = None) -> ExperimentReport:
    ctx = context or ExperimentContext.default()
    started = time.perf_counter()
    acc = ctx.accumulator(ExperimentName.projected_expansion)
    a1, a2 = 1.0, 2.0
    cases = [
        ("h=0", GraphPatch(a1, a2)),
        ("h=x1^2x2^2", GraphPatch(a1, a2, PolynomialField.quartic_cross(1.0))),
    ]
    for name, base in cases:
        errors: dict[str, list[float]] = {"u1_dot": [], "u2/x2": [], "u2_ddot/x2": []}
        last: dict[str, tuple[float, float]] = {}
        for x2 in X2_LADDER:
            jet = projected_jet(base, r, x2, ctx.settings)
            targets = {
                "u1_dot": (jet.u1_dot, 1.0 + r * a1),
                "u2/x2": (jet.u2 / x2, 1.0 + r * a2),
                "u2_ddot/x2": (
                    jet.u2_ddot / x2,
                    -(1.0 + r * a1 + r * a2) * a1 * a2 + r * _second_time_derivative_of_h2(base, x2) / x2,
                ),
            }
            for key, (measured, target) in targets.items():
                errors[key].append(abs(measured - target) / max(abs(target), 1.0))
                last[key] = (measured, target)
        smallest = X2_LADDER[-1]
        for key, (measured, target) in last.items():
            acc.relative(f"{name},x2={smallest:g},{key}", measured, target, 0.05)
            acc.at_least(f"{name},{key},error_order", error_order(errors[key], X2_LADDER[0] / X2_LADDER[1]), 1.0)
    return _finish(acc, started)


@dataclass(frozen=True)
class ResidualLadder:
    values: tuple[float, ...]
    extrapolated: float
    order: float
    monotone: bool


def residual_ladder(base: GraphPatch, r: float, settings: Settings) -> ResidualLadder:
    """(ü₂ + a₁ᵣa₂ᵣ u̇₁² u₂)/x₂ along the x₂ ladder, from the projected curve itself."""
    a1r = offset_curvature_law(base.a1, r)
    a2r = offset_curvature_law(base.a2, r)
    values = []
    for x2 in X2_LADDER:
        jet = projected_jet(base, r, x2, settings)
        values.append((jet.u2_ddot + a1r * a2r * jet.u1_dot**2 * jet.u2) / x2)

    return ResidualLadder(
        values=tuple(values),
        extrapolated=richardson_extrapolate(values, p=2.0, scales=X2_LADDER),
        order=observed_order(values, scales=X2_LADDER),
        monotone=is_monotone(values),
    )


def exp_rigidity_residual(*, r: float = 0.5, context: ExperimentContext | None = None) -> ExperimentReport:
    ctx = context or ExperimentContext.default()
    started = time.perf_counter()
    acc = ctx.accumulator(ExperimentName.rigidity_residual)
    a1, a2 = 1.0, 2.0

    generic = residual_ladder(GraphPatch(a1, a2), r, ctx.settings)
    acc.relative("generic,limit", generic.extrapolated, -r * a1 * a2**2, 0.05)
    acc.at_least("generic,order", generic.order, 1.0)

    swapped = residual_ladder(GraphPatch(a2, a1, SwappedField(ZeroField())), r, ctx.settings)
    acc.relative("swapped,limit", swapped.extrapolated, -r * a1**2 * a2, 0.05)

    # round cases must vanish relative to the generic obstruction at the finest scale
    budget = 0.05 * abs(generic.values[-1])
    for name, base in (("cylinder", cylinder_graph(1.0, axis=0)), ("sphere", sphere_graph(1.0))):
        ladder = residual_ladder(base, r, ctx.settings)
        acc.absolute(f"{name},finest", abs(ladder.values[-1]), 0.0, budget)
        acc.absolute(f"{name},limit", ladder.extrapolated, 0.0, budget)
    return _finish(acc, started)


# ── round-cylinder criterion ───────────────────────────────────


FloatArrayLike = float | Sequence[float] | np.ndarray


def _ellipse_curvature(alpha: float, beta: float, t: float) -> float:
    return alpha * beta / (alpha**2 * math.sin(t) ** 2 + beta**2 * math.cos(t) ** 2) ** 1.5


def horizontal_rate(base: SurfacePatch, r: float, t: FloatArrayLike) -> np.ndarray:
    """Horizontal arc length on the offset cylinder per unit arc length of the base profile.

    A helix ρ = x3 on the base maps to a curve with dρ_r/dx3 equal to this
    rate, so the offset pair preserves geodesics exactly when it is constant.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    params = np.stack([t, np.zeros_like(t)], axis=-1)
    tangents = OffsetPatch(base, r).d1(params)
    speed = np.linalg.norm(base.d1(params)[..., 0, :], axis=-1)
    return np.linalg.norm(tangents[..., 0, :2], axis=-1) / speed


def exp_round_cylinder(
    profile: PlanarCurve | None = None,
    r: float = 1.0,
    *,
    context: ExperimentContext | None = None,
) -> ExperimentReport:
    ctx = context or ExperimentContext.default()
    started = time.perf_counter()
    acc = ctx.accumulator(ExperimentName.round_cylinder)
    profiles = [("circle", Ellipse(1.0, 1.0)), ("ellipse", Ellipse(1.0, 3.0))] if profile is None else [("profile", profile)]
    grid = np.linspace(0.0, 2.0 * math.pi, 64, endpoint=False)
    for name, curve in profiles:
        base = EllipticCylinderPatch(curve)
        for t_label, t in (("0", 0.0), ("pi/2", math.pi / 2)):
            ratio = float(horizontal_rate(base, r, t)[0])
            if isinstance(curve, Ellipse):
                target = 1.0 + r * _ellipse_curvature(curve.alpha, curve.beta, t)
            else:
                target = 1.0 + r * float(fundamental_forms(base, np.array([t, 0.0])).L / np.linalg.norm(curve.d1(t)) ** 2)
            acc.relative(f"{name},t={t_label},ratio", ratio, target, 1e-6)
        rates = horizontal_rate(base, r, grid)
        spread = float(rates.max() - rates.min())
        if isinstance(curve, Ellipse) and curve.alpha == curve.beta:
            acc.absolute(f"{name},spread", spread, 0.0, 1e-8)
        elif isinstance(curve, Ellipse):
            a_values = [_ellipse_curvature(curve.alpha, curve.beta, t) for t in grid]
            acc.relative(f"{name},spread", spread, r * (max(a_values) - min(a_values)), 1e-6)
        else:
            acc.at_least(f"{name},spread", spread, 0.0)
    return _finish(acc, started)


# ── the capped cylinder ────────────────────────────────────────


def capped_length(theta: float, r: float) -> float:
    return math.sqrt(math.pi**2 / 4 + r**2 * theta**2) + r * math.acos(-math.cos(theta) / math.sqrt(2.0))


def capped_minimizer(r: float) -> float:
    """θ minimizing the projected length; stationary points satisfy θ = (π/2r)·sin θ."""
    c = math.pi / (2.0 * r)
    found = optimize.minimize_scalar(lambda th: capped_length(th, r), bounds=(0.0, math.pi), method="bounded",
                                     options={"xatol": 1e-10})
    theta = float(found.x)
    if c <= 1.0:
        return theta
    for _ in range(20):
        step = (theta - c * math.sin(theta)) / (1.0 - c * math.cos(theta))
        theta -= step
        if abs(step) < 1e-15:
            break
    return theta


@dataclass(frozen=True)
class CappedScenario:
    r: float

    def __post_init__(self) -> None:
        if self.r < 1.0:
            raise OutOfDomainError(f"capped-cylinder scale must be >= 1, got {self.r}", point=self.r)

    @property
    def p(self) -> np.ndarray:
        return np.array([0.0, self.r, math.pi / 2])

    def m(self, theta: float) -> np.ndarray:
        return np.array([self.r * math.sin(theta), self.r * math.cos(theta), 0.0])

    @property
    def q(self) -> np.ndarray:
        return np.array([0.0, -self.r / math.sqrt(2.0), -self.r / math.sqrt(2.0)])


def _slerp(a: np.ndarray, b: np.ndarray, count: int) -> np.ndarray:
    omega = math.acos(float(np.clip(a @ b, -1.0, 1.0)))
    s = np.linspace(0.0, 1.0, count)[:, None]
    return (np.sin((1.0 - s) * omega) * a + np.sin(s * omega) * b) / math.sin(omega)


def unit_path_params(theta: float, count: int = 2000) -> tuple[np.ndarray, np.ndarray]:
    """Capped-cylinder parameters of the unit-scale curve P₁ → M₁(θ) → Q₁.

    The first piece is straight on the unrolled cylinder, the second a
    great-circle arc on the cap.
    """
    unit = CappedCylinderPatch(1.0)
    scenario = CappedScenario(1.0)
    s = np.linspace(0.0, 1.0, count)[:, None]
    start = np.array([math.pi / 2, math.pi / 2])
    seam = np.array([math.pi / 2 - theta, 0.0])
    side = (1.0 - s) * start + s * seam
    arc = _slerp(scenario.m(theta), scenario.q, count)
    cap = np.array([unit.locate(x) for x in arc])
    cap[:, 0] = np.unwrap(cap[:, 0])
    cap[0] = seam
    return side, cap


def seam_slopes(r: float, theta: float) -> tuple[float, float]:
    outer = OffsetPatch(CappedCylinderPatch(1.0), r - 1.0)
    seam = np.array([math.pi / 2 - theta, 0.0])
    below = np.array([seam[0], -np.finfo(float).tiny])
    side_velocity = np.array([-theta, -math.pi / 2])

    unit_m = CappedScenario(1.0).m(theta)
    unit_q = CappedScenario(1.0).q
    chord = unit_q - (unit_q @ unit_m) * unit_m
    cap_velocity = np.linalg.lstsq(CappedCylinderPatch(1.0).d1(below).T, chord, rcond=None)[0]

    def slope(tangent: np.ndarray) -> float:
        return abs(float(tangent[2])) / float(np.linalg.norm(tangent[:2]))

    return slope(outer.d1(below).T @ cap_velocity), slope(outer.d1(seam).T @ side_velocity)


def _polyline_length(points: np.ndarray) -> float:
    return float(np.sum(np.linalg.norm(np.diff(points, axis=0), axis=1)))


def exp_capped_cylinder(r: float = 1.0, *, context: ExperimentContext | None = None) -> ExperimentReport:
    ctx = context or ExperimentContext.default()
    started = time.perf_counter()
    scenario = CappedScenario(r)
    acc = ctx.accumulator(ExperimentName.capped_cylinder)
    c = math.pi / (2.0 * r)

    theta_star = capped_minimizer(r)
    if c > 1.0:
        oracle = float(optimize.brentq(lambda th: th - c * math.sin(th), 1e-6, math.pi))
        acc.absolute("theta_star", theta_star, math.pi / 2 if r == 1.0 else oracle, 1e-10 if r == 1.0 else 1e-3)
        acc.absolute("stationarity", theta_star - c * math.sin(theta_star), 0.0, 1e-10)
        sphere_slope, cylinder_slope = seam_slopes(r, theta_star)
        acc.absolute("slope_mismatch_at_theta_star", abs(sphere_slope - cylinder_slope), 0.0, 1e-8)
        acc.relative("length_at_theta_star", capped_length(theta_star, r), capped_length(oracle, r), 1e-9)
    else:
        acc.absolute("theta_star", theta_star, 0.0, 1e-3)

    # the unit-scale geodesic passes the seam at θ = π/2
    sphere_slope, cylinder_slope = seam_slopes(r, math.pi / 2)
    acc.absolute("slope_sphere", sphere_slope, 1.0, 1e-9)
    acc.absolute("slope_cylinder", cylinder_slope, 1.0 / r, 1e-9)
    acc.absolute("slope_mismatch", abs(sphere_slope - cylinder_slope), abs(1.0 - 1.0 / r), 1e-9)

    outer = OffsetPatch(CappedCylinderPatch(1.0), r - 1.0)
    for label, theta in (("pi/4", math.pi / 4), ("pi/2", math.pi / 2), ("3pi/4", 3 * math.pi / 4)):
        side, cap = unit_path_params(theta)
        measured = _polyline_length(outer.point(side)) + _polyline_length(outer.point(cap))
        acc.absolute(f"length,theta={label}", measured, capped_length(theta, r), 1e-4)

    side, cap = unit_path_params(math.pi / 2, count=9)
    acc.absolute("endpoint_P", float(np.linalg.norm(outer.point(side[0]) - scenario.p)), 0.0, 1e-12)
    acc.absolute("endpoint_M", float(np.linalg.norm(outer.point(side[-1]) - scenario.m(math.pi / 2))), 0.0, 1e-12)
    acc.absolute("endpoint_Q", float(np.linalg.norm(outer.point(cap[-1]) - scenario.q)), 0.0, 1e-12)

    unit = CappedCylinderPatch(1.0)
    worst = 0.0
    for params in np.vstack([side[1:-1], cap[1:-1]]):
        result = foot_point(unit, outer.point(params), options=ctx.footpoint)
        worst = max(worst, float(np.linalg.norm(result.foot_x - unit.point(params))))
    acc.absolute("round_trip", worst, 0.0, 1e-6)
    acc.absolute("length_unit_scale", capped_length(math.pi / 2, 1.0), math.pi / math.sqrt(2.0) + math.pi / 2, 1e-12)
    return _finish(acc, started)


# ── ellipse foliation ──────────────────────────────────────────


def exp_ellipse_foliation(
    alpha: float = 1.0,
    beta: float = 3.0,
    k_values: Sequence[float] = (0.5, 1.5),
    *,
    context: ExperimentContext | None = None,
) -> ExperimentReport:
    ctx = context or ExperimentContext.default()
    started = time.perf_counter()
    acc = ctx.accumulator(ExperimentName.ellipse_foliation)
    base = Ellipse(alpha, beta)
    grid_size = ctx.settings.convexity_grid
    t = np.linspace(0.0, 2.0 * math.pi, grid_size, endpoint=False)

    k_star = convexity_threshold(alpha, beta, grid=grid_size)
    k_sharp = sharp_end_threshold(alpha, beta)
    if math.isinf(k_sharp):
        acc.absolute("k_star_finite", float(math.isfinite(k_star)), 0.0, 0.0)
    else:
        acc.relative("k_star", k_star, k_sharp, 1e-6)

    # the flattest end of c sits on the focal set of C_k first
    t_flat = float(t[np.argmin(planar_curvature(base, t))])
    query = np.append(base.point(t_flat), 0.0)

    curves = [sample_closed(base)]
    for k in k_values:
        prefix = f"k={k:g}"
        closed = EllipseOffsetCurve(alpha, beta, k)
        generic = planar_offset_curve(OffsetCurveSpec.curvature_scaled(base, k), t)
        acc.absolute(f"{prefix},closed_form", float(np.max(np.linalg.norm(closed.point(t) - generic, axis=1))), 0.0, 1e-9)
        acc.absolute(f"{prefix},C(0).x", float(closed.point(0.0)[0]), alpha + k * beta**2 / alpha, 1e-12)
        acc.absolute(f"{prefix},C(pi/2).y", float(closed.point(math.pi / 2)[1]), beta + k * alpha**2 / beta, 1e-12)

        verdict = convexity_check(closed, grid_size)
        acc.absolute(f"{prefix},convex", float(verdict.convex), float(k < k_sharp), 0.0)

        rates = matched_normal_rate(closed, base, t)
        acc.absolute(f"{prefix},normal_rate", float(np.max(np.abs(rates - (1.0 + k)))), 0.0, 1e-8)
        # helix ρ = x3 on the base cylinder; matched normals carry it at rate 1 + k
        acc.absolute(f"{prefix},drho_dx3_spread", float(rates.max() - rates.min()), 0.0, 1e-8)

        if k > k_star:
            result = foot_point(EllipticCylinderPatch(closed), query, options=ctx.footpoint)
            if result.multi_valued:
                acc.warn(f"{prefix}: reverse projection from c(t={t_flat:.4g}) is not single-valued")
            acc.absolute(f"{prefix},multi_valued", float(result.multi_valued), 1.0, 0.0)
        curves.append(sample_closed(closed))

    if ctx.plot:
        path = emit_svg(curves, ctx.out_dir / f"{ExperimentName.ellipse_foliation.value}.svg", closed=[True] * len(curves))
        acc.artifacts.append(path.name)
    return _finish(acc, started)


# ── projection consistency ─────────────────────────────────────


def exp_projection_consistency(*, samples: int = 10, context: ExperimentContext | None = None) -> ExperimentReport:
    ctx = context or ExperimentContext.default()
    started = time.perf_counter()
    acc = ctx.accumulator(ExperimentName.projection_consistency)
    options = ctx.footpoint

    pairs = [
        ("spheres", SpherePatch(1.0), SpherePatch(2.0), 1e-8),
        ("cylinders", RoundCylinderPatch(1.0), RoundCylinderPatch(3.0), 1e-8),
        ("capped", CappedCylinderPatch(1.0), CappedCylinderPatch(2.0), 1e-6),
    ]
    for name, inner, outer, tolerance in pairs:
        check = inverse_consistency(inner, outer, samples, rng=ctx.rng, options=options)
        acc.absolute(f"{name},inverse", check.max_deviation, 0.0, tolerance)

    sphere = SpherePatch(1.0)
    result = foot_point(sphere, np.array([0.0, 0.0, 5.0]), options=options)
    acc.absolute("sphere,foot", float(np.linalg.norm(result.foot_x - np.array([0.0, 0.0, 1.0]))), 0.0, 1e-10)
    acc.absolute("sphere,distance", result.distance, 4.0, 1e-10)

    cylinder = RoundCylinderPatch(1.0)
    result = foot_point(cylinder, np.array([2.0, 0.0, 7.0]), options=options)
    acc.absolute("cylinder,foot", float(np.linalg.norm(result.foot_x - np.array([1.0, 0.0, 7.0]))), 0.0, 1e-10)

    graph = GraphPatch(1.0, 2.0)
    u = np.array([0.1, 0.2])
    query = evaluate(graph, u) + 0.5 * fundamental_forms(graph, u).normal
    result = foot_point(graph, query, options=options)
    acc.absolute("graph,foot_u", float(np.max(np.abs(result.foot_u - u))), 0.0, 1e-8)
    acc.absolute("graph,normal_angle", normal_angle(graph, query, result), 0.0, 1e-7)

    s = np.linspace(-1.0, 1.0, 101)
    across = line_projection(cylinder, [0.0, 2.0, 0.0], [1.0, 0.0, 0.0], s, options=options)
    acc.absolute("line_across,max_kappa_g", max_geodesic_curvature(cylinder, across), 0.0, 1e-6)
    oblique = line_projection(cylinder, [0.0, 2.0, 0.0], [1.0, 0.0, 1.0], s, options=options)
    acc.at_least("line_oblique,max_kappa_g", max_geodesic_curvature(cylinder, oblique), 0.05)

    # analytic partials against central differences at the configured step
    fd_scale, fd_tolerance = ctx.settings.fd_step_scale, ctx.settings.fd_rel_tolerance
    patches = [
        ("graph", graph),
        ("sphere", sphere),
        ("cylinder", cylinder),
        ("elliptic", EllipticCylinderPatch(Ellipse(1.0, 3.0))),
        ("capped", CappedCylinderPatch(1.0)),
        ("offset", OffsetPatch(graph, 0.5)),
    ]
    for name, patch in patches:
        lo, hi = patch.domain.sample_box()
        points = ctx.rng.uniform(lo, hi, size=(samples, 2))
        worst = max(max(check_derivatives(patch, p, scale=fd_scale).values()) for p in points)
        acc.absolute(f"{name},derivatives", worst, 0.0, fd_tolerance)
        gamma_gap = max(
            relative_mismatch(
                christoffel(patch, p, method=ChristoffelMethod.metric).gamma,
                christoffel(patch, p, method=ChristoffelMethod.finite_difference, fd_scale=fd_scale).gamma,
            )
            for p in points
        )
        acc.absolute(f"{name},christoffel", gamma_gap, 0.0, fd_tolerance)
    return _finish(acc, started)


# ── service ────────────────────────────────────────────────────


Runner = Callable[[RunConfig, ExperimentContext], ExperimentReport]

RUNNERS: dict[ExperimentName, Runner] = {
    ExperimentName.offset_curvature: lambda cfg, ctx: exp_offset_curvature(context=ctx),
    ExperimentName.sphere_cylinder_preservation: lambda cfg, ctx: exp_preservation_sphere_cylinder(context=ctx),
    ExperimentName.geodesic_limit: lambda cfg, ctx: exp_geodesic_limit(context=ctx),
    ExperimentName.projected_expansion: lambda cfg, ctx: exp_projected_expansion(context=ctx),
    ExperimentName.rigidity_residual: lambda cfg, ctx: exp_rigidity_residual(context=ctx),
    ExperimentName.round_cylinder: lambda cfg, ctx: exp_round_cylinder(r=1.0 if cfg.r is None else cfg.r, context=ctx),
    ExperimentName.capped_cylinder: lambda cfg, ctx: exp_capped_cylinder(1.0 if cfg.r is None else cfg.r, context=ctx),
    ExperimentName.ellipse_foliation: lambda cfg, ctx: exp_ellipse_foliation(context=ctx),
    ExperimentName.projection_consistency: lambda cfg, ctx: exp_projection_consistency(context=ctx),
}


class ExperimentService:
    def __init__(self, settings: Settings) -> None:
        self.settings = settings

    def run(self, config: RunConfig) -> list[ExperimentReport]:
        return [self.run_one(name, config) for name in config.experiments]

    def run_one(self, name: ExperimentName, config: RunConfig) -> ExperimentReport:
        context = ExperimentContext(
            settings=self.settings,
            rng=np.random.default_rng(config.seed),
            out_dir=config.out_dir,
            plot=config.plot,
            tol_overrides=dict(config.tol_overrides),
        )
        logger.info("── %s %s", name.value, "─" * max(4, 44 - len(name.value)))
        logger.info("  seed=%d  r=%s  plot=%s  overrides=%d", config.seed, config.r, config.plot, len(config.tol_overrides))
        report = RUNNERS[name](config, context)
        failed = report.failed_rows
        logger.info("  %d rows, %d failed in %dms", len(report.rows), len(failed), report.took_ms)
        for row in failed:
            logger.info("  FAIL %s: measured=%.12g target=%.12g tol=%.1e", row.label, row.measured, row.target, row.tolerance)
        return report
