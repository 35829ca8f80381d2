from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg, ndimage

from app.config import Settings
from app.errors import SolverError
from app.geodesics import SampledCurve
from app.surfaces import Chart, OffsetPatch, SurfacePatch
from app.utils import FloatArray

logger = logging.getLogger("geodesic_lab")

_TINY = 1e-300
_MAX_SEEDS = 8


@dataclass(frozen=True)
class FootPointOptions:
    grid: int = 64
    max_iter: int = 50
    tol: float = 1e-10
    tie: float = 1e-6

    @classmethod
    def from_settings(cls, settings: Settings) -> FootPointOptions:
        return cls(
            grid=settings.footpoint_grid,
            max_iter=settings.footpoint_max_iter,
            tol=settings.footpoint_tol,
            tie=settings.multivalued_tie,
        )


@dataclass(frozen=True)
class ProjectionResult:
    foot_u: FloatArray
    foot_x: FloatArray
    distance: float
    iterations: int
    residual: float
    multi_valued: bool = False
    candidates: int = 1


def _orthogonality(patch: SurfacePatch, x: FloatArray, u: FloatArray) -> tuple[FloatArray, FloatArray, FloatArray, float]:
    foot = patch.point(u, check=False)
    tangents = patch.d1(u, check=False)
    diff = x - foot
    rhs = tangents @ diff
    dist = float(np.linalg.norm(diff))
    if dist <= 1e-12 * (1.0 + float(np.linalg.norm(x))):
        return foot, tangents, rhs, 0.0
    residual = float(np.max(np.abs(rhs) / (dist * np.linalg.norm(tangents, axis=1))))
    return foot, tangents, rhs, residual


def _newton_step(patch: SurfacePatch, x: FloatArray, u: FloatArray, tangents: FloatArray, rhs: FloatArray, foot: FloatArray) -> FloatArray:
    g = tangents @ tangents.T
    hess = g - np.einsum("ijk,k->ij", patch.d2(u, check=False), x - foot)
    try:
        factor = linalg.cho_factor(hess)
        return linalg.cho_solve(factor, rhs)
    except linalg.LinAlgError:
        return linalg.solve(g, rhs, assume_a="pos")


def _refine(patch: SurfacePatch, x: FloatArray, u0: FloatArray, options: FootPointOptions) -> ProjectionResult:
    """Damped Newton on (x - S(u))·∂ᵢS(u) = 0 from a seed."""
    domain = patch.domain
    u = domain.clip(u0)
    best: ProjectionResult | None = None
    for iteration in range(1, options.max_iter + 1):
        foot, tangents, rhs, residual = _orthogonality(patch, x, u)
        dist = float(np.linalg.norm(x - foot))
        current = ProjectionResult(u.copy(), foot, dist, iteration, residual)
        if best is None or residual < best.residual:
            best = current
        if residual <= options.tol:
            polished = domain.clip(u + _newton_step(patch, x, u, tangents, rhs, foot))
            p_foot, _, _, p_residual = _orthogonality(patch, x, polished)
            if p_residual <= residual:
                return ProjectionResult(polished, p_foot, float(np.linalg.norm(x - p_foot)), iteration, p_residual)
            return current

        step = _newton_step(patch, x, u, tangents, rhs, foot)
        phi0 = 0.5 * dist * dist
        slope = float(rhs @ step)
        alpha = 1.0
        for _ in range(40):
            trial = domain.clip(u + alpha * step)
            trial_dist = float(np.linalg.norm(x - patch.point(trial, check=False)))
            if 0.5 * trial_dist**2 <= phi0 - 1e-4 * alpha * slope + 4.0 * np.finfo(float).eps * phi0:
                break
            alpha *= 0.5
        u = trial

    assert best is not None
    raise SolverError(
        f"foot-point Newton did not converge in {options.max_iter} iterations (best residual {best.residual:.3e})",
        best=best,
    )


def _seeds(patch: SurfacePatch, x: FloatArray, grid: int) -> list[FloatArray]:
    domain = patch.domain
    axes = []
    for axis in range(2):
        lo, hi = domain.lower[axis], domain.upper[axis]
        axes.append(np.linspace(lo, hi, grid, endpoint=not domain.periodic[axis]))
    mesh = np.stack(np.meshgrid(axes[0], axes[1], indexing="ij"), axis=-1)
    dist = np.linalg.norm(patch.point(mesh, check=False) - x, axis=-1)
    modes = ["wrap" if periodic else "nearest" for periodic in domain.periodic]
    local = dist <= ndimage.minimum_filter(dist, size=3, mode=modes)
    idx = np.argwhere(local)
    order = np.argsort(dist[local])
    cutoff = 1.5 * float(dist[local].min()) + 1e-12
    seeds = [mesh[tuple(idx[j])] for j in order if dist[tuple(idx[j])] <= cutoff]
    return seeds[:_MAX_SEEDS]


def _candidates(patch: SurfacePatch, x: FloatArray, options: FootPointOptions, chart: Chart | None = None) -> tuple[list[ProjectionResult], ProjectionResult | None]:
    found: list[ProjectionResult] = []
    failed: ProjectionResult | None = None
    for seed in _seeds(patch, x, options.grid):
        try:
            result = _refine(patch, x, seed, options)
        except linalg.LinAlgError:
            continue
        except SolverError as exc:
            if exc.best is not None and (failed is None or exc.best.residual < failed.residual):
                failed = exc.best
            continue
        if chart is not None and not chart.contains(result.foot_x):
            continue
        found.append(result)
    return found, failed


def foot_point(
    patch: SurfacePatch,
    x: FloatArray,
    tol: float | None = None,
    *,
    options: FootPointOptions | None = None,
) -> ProjectionResult:
    options = options or FootPointOptions()
    if tol is not None:
        if tol <= 0:
            raise ValueError("tol must be positive.")
        options = replace(options, tol=tol)
    x = np.asarray(x, dtype=float).reshape(3)

    charts = patch.charts()
    found: list[ProjectionResult] = []
    failed: ProjectionResult | None = None
    if charts:
        for chart in charts:
            chart_found, chart_failed = _candidates(chart.patch, x, options, chart)
            found.extend(replace(r, foot_u=patch.locate(r.foot_x)) for r in chart_found)
            if chart_failed is not None and (failed is None or chart_failed.residual < failed.residual):
                failed = chart_failed
    else:
        found, failed = _candidates(patch, x, options)

    if not found:
        raise SolverError(f"no foot point found for {x!r} on {type(patch).__name__}", best=failed)

    found.sort(key=lambda r: r.distance)
    best = found[0]
    distinct = [best]
    for result in found[1:]:
        if all(np.linalg.norm(result.foot_x - kept.foot_x) > 1e-6 * max(1.0, best.distance) for kept in distinct):
            distinct.append(result)
    ties = [r for r in distinct[1:] if r.distance - best.distance <= options.tie * max(best.distance, _TINY)]
    if ties:
        logger.warning(
            "projection of %s onto %s is not single-valued: %d feet within %.1e of distance %.6g",
            np.array2string(x, precision=6), type(patch).__name__, len(ties) + 1, options.tie, best.distance,
        )
    return replace(best, multi_valued=bool(ties), candidates=len(distinct))


def offset_surface(patch: SurfacePatch, r: float) -> OffsetPatch:
    if r < 0:
        raise ValueError("offset distance must be non-negative.")
    return OffsetPatch(patch, r)


def offset_curvature_law(a: float, r: float) -> float:
    if a < 0 or r < 0:
        raise ValueError("curvature and offset distance must be non-negative.")
    return a / (1.0 + r * a)


def project_points(
    points: FloatArray,
    t: FloatArray,
    target: SurfacePatch,
    *,
    options: FootPointOptions | None = None,
) -> SampledCurve:
    results = [foot_point(target, p, options=options) for p in np.asarray(points, dtype=float)]
    u = np.array([r.foot_u for r in results])
    for axis in range(2):
        if target.domain.periodic[axis]:
            span = target.domain.upper[axis] - target.domain.lower[axis]
            u[:, axis] = np.unwrap(u[:, axis], period=span)
    multi = any(r.multi_valued for r in results)
    return SampledCurve(t=t, u=u, x=np.array([r.foot_x for r in results]), multi_valued=multi)


def project_curve(
    curve: SampledCurve,
    target: SurfacePatch,
    tol: float | None = None,
    *,
    options: FootPointOptions | None = None,
) -> SampledCurve:
    options = options or FootPointOptions()
    if tol is not None:
        options = replace(options, tol=tol)
    projected = project_points(curve.x, curve.t, target, options=options)
    if projected.multi_valued:
        logger.warning("projected curve on %s passes through multi-valued projections", type(target).__name__)
    return projected


def line_projection(
    target: SurfacePatch,
    origin: FloatArray,
    direction: FloatArray,
    s_values: FloatArray,
    *,
    options: FootPointOptions | None = None,
) -> SampledCurve:
    s_values = np.asarray(s_values, dtype=float)
    points = np.asarray(origin, dtype=float) + s_values[:, None] * np.asarray(direction, dtype=float)
    return project_points(points, s_values, target, options=options)


@dataclass(frozen=True)
class InverseConsistency:
    max_deviation: float
    samples: int


def inverse_consistency(
    s1: SurfacePatch,
    s2: SurfacePatch,
    samples: int,
    *,
    rng: np.random.Generator | None = None,
    options: FootPointOptions | None = None,
) -> InverseConsistency:
    rng = rng or np.random.default_rng(0)
    lo, hi = s1.domain.sample_box()
    worst = 0.0
    for _ in range(samples):
        x = s1.point(rng.uniform(lo, hi))
        there = foot_point(s2, x, options=options)
        back = foot_point(s1, there.foot_x, options=options)
        worst = max(worst, float(np.linalg.norm(back.foot_x - x)))
    logger.debug("inverse consistency %s/%s: %.3e over %d samples", type(s1).__name__, type(s2).__name__, worst, samples)
    return InverseConsistency(max_deviation=worst, samples=samples)


def normal_angle(patch: SurfacePatch, x: FloatArray, result: ProjectionResult) -> float:
    tangents = patch.d1(result.foot_u, check=False)
    normal = np.cross(tangents[0], tangents[1])
    diff = np.asarray(x, dtype=float) - result.foot_x
    if np.linalg.norm(diff) == 0.0:
        return 0.0
    cosine = abs(float(normal @ diff)) / (np.linalg.norm(normal) * np.linalg.norm(diff))
    return math.acos(min(cosine, 1.0))
