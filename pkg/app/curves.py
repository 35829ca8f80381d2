"""Closed planar curves and their offsets, for cylinder profiles."""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize

from app.utils import FloatArray

logger = logging.getLogger("geodesic_lab")


class PlanarCurve(ABC):
    """Closed curve c(t), counterclockwise, periodic with ``period``. Vectorized over t."""

    period: float = 2.0 * math.pi

    @abstractmethod
    def derivative(self, t: FloatArray, order: int) -> FloatArray:
        ...

    def point(self, t: FloatArray) -> FloatArray:
        return self.derivative(t, 0)

    def d1(self, t: FloatArray) -> FloatArray:
        return self.derivative(t, 1)

    def d2(self, t: FloatArray) -> FloatArray:
        return self.derivative(t, 2)

    def d3(self, t: FloatArray) -> FloatArray:
        return self.derivative(t, 3)


def _trig(t: FloatArray, order: int) -> tuple[FloatArray, FloatArray]:
    shifted = np.asarray(t, dtype=float) + order * math.pi / 2
    return np.cos(shifted), np.sin(shifted)


@dataclass(frozen=True)
class Ellipse(PlanarCurve):
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("ellipse semi-axes must be positive.")

    def derivative(self, t: FloatArray, order: int) -> FloatArray:
        c, s = _trig(t, order)
        return np.stack([self.alpha * c, self.beta * s], axis=-1)


@dataclass(frozen=True)
class EllipseOffsetCurve(PlanarCurve):
    """Offset of the ellipse (α cos t, β sin t) by k / curvature, in closed form.

    With w = α² sin² t + β² cos² t the curve is
    ((α + k w/α) cos t, (β + k w/β) sin t).
    """

    alpha: float
    beta: float
    k: float

    def __post_init__(self) -> None:
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("ellipse semi-axes must be positive.")
        if self.k < 0:
            raise ValueError("k must be non-negative.")

    def _w(self, t: FloatArray, order: int) -> FloatArray:
        t = np.asarray(t, dtype=float)
        spread = self.alpha**2 - self.beta**2
        if order == 0:
            return self.alpha**2 * np.sin(t) ** 2 + self.beta**2 * np.cos(t) ** 2
        # w = (α² + β²)/2 - (α² - β²)/2 · cos 2t
        return -0.5 * spread * (2.0**order) * np.cos(2.0 * t + order * math.pi / 2)

    def derivative(self, t: FloatArray, order: int) -> FloatArray:
        x = np.zeros(np.shape(t))
        y = np.zeros(np.shape(t))
        for j in range(order + 1):
            binom = math.comb(order, j)
            w_j = self._w(t, j)
            a_j = (self.alpha if j == 0 else 0.0) + self.k / self.alpha * w_j
            b_j = (self.beta if j == 0 else 0.0) + self.k / self.beta * w_j
            c, s = _trig(t, order - j)
            x = x + binom * a_j * c
            y = y + binom * b_j * s
        return np.stack([x, y], axis=-1)


@dataclass(frozen=True)
class OffsetCurveSpec:
    base: PlanarCurve
    r_of_t: Callable[[FloatArray], FloatArray]

    @classmethod
    def constant(cls, base: PlanarCurve, r: float) -> OffsetCurveSpec:
        if r < 0:
            raise ValueError("offset distance must be non-negative.")
        return cls(base, lambda t: np.full(np.shape(t), float(r)))

    @classmethod
    def curvature_scaled(cls, base: PlanarCurve, k: float) -> OffsetCurveSpec:
        """r(t) = k / a(t); the offset that keeps 1 + r·a constant."""
        if k < 0:
            raise ValueError("k must be non-negative.")
        return cls(base, lambda t: k / planar_curvature(base, t))

    def distance(self, t: FloatArray) -> FloatArray:
        r = np.asarray(self.r_of_t(t), dtype=float)
        if np.any(r < 0):
            raise ValueError("offset distance r(t) must be non-negative.")
        return r


def unit_tangent(curve: PlanarCurve, t: FloatArray) -> FloatArray:
    d = curve.d1(t)
    return d / np.linalg.norm(d, axis=-1, keepdims=True)


def outward_normal(curve: PlanarCurve, t: FloatArray) -> FloatArray:
    """Unit tangent rotated by -90°; outward for counterclockwise curves."""
    tangent = unit_tangent(curve, t)
    return np.stack([tangent[..., 1], -tangent[..., 0]], axis=-1)


def planar_offset_curve(spec: OffsetCurveSpec, t: FloatArray) -> FloatArray:
    r = spec.distance(t)
    return spec.base.point(t) + r[..., None] * outward_normal(spec.base, t)


def planar_curvature(curve: PlanarCurve, t: FloatArray) -> FloatArray:
    """Signed curvature (x′y″ − y′x″)/|c′|³."""
    d1 = curve.d1(t)
    d2 = curve.d2(t)
    cross = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
    return cross / np.linalg.norm(d1, axis=-1) ** 3


@dataclass(frozen=True)
class Convexity:
    convex: bool
    min_curvature: float


def convexity_check(curve: PlanarCurve, grid: int = 1000) -> Convexity:
    if grid < 64:
        raise ValueError("convexity_check needs at least 64 samples.")
    t = np.linspace(0.0, curve.period, grid, endpoint=False)
    kappa = planar_curvature(curve, t)
    floor = 1e-12 * float(np.max(np.abs(kappa)))
    signs = np.sign(np.where(np.abs(kappa) <= floor, 0.0, kappa))
    convex = not (np.any(signs > 0) and np.any(signs < 0))
    return Convexity(convex=convex, min_curvature=float(kappa.min()))


def matched_normal_rate(offset: PlanarCurve, base: PlanarCurve, t: FloatArray) -> FloatArray:
    """Rate of the offset's arc length per base arc length, measured along matched normals.

    This is the tangential component (C′·T)/|c′| with T the base unit tangent.
    """
    tangent = unit_tangent(base, t)
    speed = np.linalg.norm(base.d1(t), axis=-1)
    return np.sum(offset.d1(t) * tangent, axis=-1) / speed


def convexity_threshold(alpha: float, beta: float, *, grid: int = 1000, k_max: float = 1e3) -> float:
    def min_curvature(k: float) -> float:
        return convexity_check(EllipseOffsetCurve(alpha, beta, k), grid).min_curvature

    hi = 1.0
    while min_curvature(hi) >= 0.0:
        hi *= 2.0
        if hi > k_max:
            logger.debug("ellipse (%g, %g) stays convex up to k=%g", alpha, beta, k_max)
            return math.inf
    return float(optimize.brentq(min_curvature, 0.0, hi, xtol=1e-12))


def sharp_end_threshold(alpha: float, beta: float) -> float:
    """k at which the offset curvature vanishes at the end of the longer axis."""
    long_axis, short_axis = max(alpha, beta), min(alpha, beta)
    denom = 2.0 * long_axis**2 - 3.0 * short_axis**2
    if denom <= 0.0:
        return math.inf
    return long_axis**2 / denom


def sample_closed(curve: PlanarCurve, count: int = 400) -> FloatArray:
    t = np.linspace(0.0, curve.period, count, endpoint=False)
    return curve.point(t)
