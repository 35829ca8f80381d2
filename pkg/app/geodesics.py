"""Geodesic flow on surface patches and curve-level geodesic diagnostics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import interpolate, linalg
from scipy.integrate import solve_ivp

from app.config import Settings
from app.errors import SamplingError, StiffnessError
from app.fields import ScalarField3
from app.surfaces import GraphPatch, SurfacePatch, christoffel, fundamental_forms
from app.utils import (
    FloatArray,
    is_monotone,
    observed_order,
    richardson_extrapolate,
    stencil_first,
    stencil_second,
)

logger = logging.getLogger("geodesic_lab")


@dataclass(frozen=True)
class GeodesicState:
    u: FloatArray
    v: FloatArray

    def __post_init__(self) -> None:
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float).reshape(2))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float).reshape(2))

    def as_vector(self) -> FloatArray:
        return np.concatenate([self.u, self.v])


@dataclass(frozen=True)
class SampledCurve:
    t: FloatArray
    u: FloatArray
    x: FloatArray
    v: FloatArray | None = None
    exit_reason: str | None = None
    multi_valued: bool = False

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=float)
        if t.ndim != 1 or len(self.u) != len(t) or len(self.x) != len(t):
            raise ValueError("SampledCurve arrays must share their first dimension.")
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("SampledCurve time stamps must be strictly increasing.")
        object.__setattr__(self, "t", t)

    def __len__(self) -> int:
        return len(self.t)


@dataclass(frozen=True)
class IntegratorOptions:
    tol: float = 1e-10
    nodes: int = 201

    @classmethod
    def from_settings(cls, settings: Settings, *, stencil: bool = False) -> IntegratorOptions:
        tol = settings.stencil_integrator_tol if stencil else settings.integrator_tol
        return cls(tol=tol, nodes=settings.curve_nodes)


def geodesic_rhs(patch: SurfacePatch, s: GeodesicState, *, check: bool = True) -> FloatArray:
    """(u̇, v̇) with v̇ₖ = -Σ Γᵏᵢⱼ vᵢ vⱼ."""
    gamma = christoffel(patch, s.u, check=check).gamma
    accel = -np.einsum("kij,i,j->k", gamma, s.v, s.v)
    return np.concatenate([s.v, accel])


def integrate_geodesic(
    patch: SurfacePatch,
    s0: GeodesicState,
    t_end: float,
    tol: float | None = None,
    *,
    options: IntegratorOptions | None = None,
) -> SampledCurve:
    options = options or IntegratorOptions()
    tol = options.tol if tol is None else tol
    if tol <= 0:
        raise ValueError("tol must be positive.")
    if t_end <= 0:
        raise ValueError("t_end must be positive; reverse the velocity to integrate backwards.")
    patch.domain.check(s0.u)

    def rhs(_: float, y: FloatArray) -> FloatArray:
        return geodesic_rhs(patch, GeodesicState(y[:2], y[2:]), check=False)

    def leaves_domain(_: float, y: FloatArray) -> float:
        return patch.domain.boundary_distance(y[:2])

    leaves_domain.terminal = True  # type: ignore[attr-defined]
    leaves_domain.direction = -1  # type: ignore[attr-defined]

    # local error per unit time, with a safety factor for the accumulated drift
    sol = solve_ivp(
        rhs,
        (0.0, t_end),
        s0.as_vector(),
        method="RK45",
        rtol=0.1 * tol,
        atol=0.1 * tol,
        t_eval=np.linspace(0.0, t_end, options.nodes),
        events=leaves_domain,
    )
    if sol.status == -1:
        raise StiffnessError(f"geodesic integration failed: {sol.message}", t=float(sol.t[-1]) if sol.t.size else None)

    exit_reason = None
    if sol.status == 1:
        t_exit = float(sol.t_events[0][0])
        exit_reason = f"domain exit at t={t_exit:.6g}"
        logger.debug("geodesic on %s truncated: %s", type(patch).__name__, exit_reason)

    u = sol.y[:2].T
    return SampledCurve(
        t=sol.t,
        u=u,
        x=patch.point(u),
        v=sol.y[2:].T,
        exit_reason=exit_reason,
    )


def reverse_geodesic(curve: SampledCurve) -> GeodesicState:
    if curve.v is None:
        raise SamplingError("curve carries no velocities.")
    return GeodesicState(curve.u[-1], -curve.v[-1])


def metric_speed(patch: SurfacePatch, curve: SampledCurve) -> FloatArray:
    if curve.v is None:
        raise SamplingError("curve carries no velocities.")
    speeds = []
    for u, v in zip(curve.u, curve.v):
        g = fundamental_forms(patch, u).metric
        speeds.append(math.sqrt(float(v @ g @ v)))
    return np.asarray(speeds)


def random_geodesics(
    patch: SurfacePatch,
    count: int,
    rng: np.random.Generator,
    t_end: float,
    *,
    box: tuple[FloatArray, FloatArray] | None = None,
    options: IntegratorOptions | None = None,
) -> list[SampledCurve]:
    lo, hi = box if box is not None else patch.domain.sample_box()
    curves = []
    for _ in range(count):
        u0 = rng.uniform(lo, hi)
        angle = rng.uniform(0.0, 2.0 * math.pi)
        chol = linalg.cholesky(fundamental_forms(patch, u0).metric, lower=True)
        v0 = linalg.solve_triangular(chol.T, np.array([math.cos(angle), math.sin(angle)]), lower=False)
        curves.append(integrate_geodesic(patch, GeodesicState(u0, v0), t_end, options=options))
    return curves


def geodesic_curvature(
    patch: SurfacePatch,
    curve: SampledCurve,
    t: float,
    *,
    step_fraction: float = 1e-3,
) -> float:
    """Geodesic curvature of a sampled surface curve at time t.

    The curve is refit against ambient chord length, so the value does not
    depend on how the curve was parametrized.
    """
    n = len(curve)
    if n < 5:
        raise SamplingError(f"geodesic curvature needs at least 5 nodes, got {n}.")
    if not curve.t[0] < t < curve.t[-1]:
        raise SamplingError(f"t={t} is not inside the sampled range [{curve.t[0]}, {curve.t[-1]}].")

    chords = np.linalg.norm(np.diff(curve.x, axis=0), axis=1)
    if np.any(chords <= 0.0):
        raise SamplingError("curve has repeated nodes.")
    sigma = np.concatenate([[0.0], np.cumsum(chords)])
    degree = 5 if n >= 6 else 3
    sigma_at = float(interpolate.make_interp_spline(curve.t, sigma, k=3 if n >= 4 else 1)(t))
    u_of_sigma = interpolate.make_interp_spline(sigma, curve.u, k=degree)

    h = step_fraction * sigma[-1]
    room = min(sigma_at - sigma[0], sigma[-1] - sigma_at) / 2.0
    h = min(h, room)
    if h <= 1e-9 * sigma[-1]:
        raise SamplingError(f"stencil around t={t} does not fit inside the sampled curve.")

    samples = u_of_sigma(sigma_at + h * np.arange(-2, 3))
    u_mid = samples[2]
    velocity = stencil_first(samples, h)
    accel = stencil_second(samples, h)

    gamma = christoffel(patch, u_mid, check=False).gamma
    g = fundamental_forms(patch, u_mid, check=False).metric
    covariant = accel + np.einsum("kij,i,j->k", gamma, velocity, velocity)
    speed2 = float(velocity @ g @ velocity)
    if speed2 <= 0.0:
        raise SamplingError(f"zero speed at t={t}.")
    normal_part = covariant - (float(covariant @ g @ velocity) / speed2) * velocity
    return math.sqrt(max(float(normal_part @ g @ normal_part), 0.0)) / speed2


def max_geodesic_curvature(
    patch: SurfacePatch,
    curve: SampledCurve,
    *,
    samples: int = 9,
    interior: float = 0.05,
) -> float:
    span = curve.t[-1] - curve.t[0]
    times = np.linspace(curve.t[0] + interior * span, curve.t[-1] - interior * span, samples)
    return max(geodesic_curvature(patch, curve, float(t)) for t in times)


@dataclass(frozen=True)
class LimitEstimate:
    values: tuple[tuple[float, float], ...]
    extrapolated: float | None
    fit_order: float
    monotone: bool = True
    notes: list[str] = field(default_factory=list)


def geodesic_ratio_limit(
    a1: float,
    a2: float,
    h: ScalarField3,
    x2_scales: Sequence[float],
) -> LimitEstimate:
    """Limit of ẍ₂/(ẋ₁² x₂) as x₂ → 0 for geodesics through (0, x₂) with velocity (1, 0)."""
    scales = [float(s) for s in x2_scales]
    if len(scales) < 3:
        raise ValueError("geodesic_ratio_limit needs at least three scales.")
    if any(s <= 0 for s in scales) or any(b >= a for a, b in zip(scales, scales[1:])):
        raise ValueError("scales must be positive and strictly decreasing.")
    patch = GraphPatch(a1, a2, h, half_width=max(1.0, 2.0 * scales[0]))
    values = []
    for x2 in scales:
        state = GeodesicState((0.0, x2), (1.0, 0.0))
        accel = geodesic_rhs(patch, state)[2:]
        values.append((x2, float(accel[1] / (state.v[0] ** 2 * x2))))

    ratios = [ratio for _, ratio in values]
    order = observed_order(ratios, scales=scales)
    if not is_monotone(ratios):
        logger.warning("ratio ladder for a=(%g, %g) is not monotone: %s", a1, a2, ratios)
        return LimitEstimate(tuple(values), None, order, monotone=False, notes=["non-monotone ladder"])
    return LimitEstimate(tuple(values), richardson_extrapolate(ratios, p=2.0, scales=scales), order)
