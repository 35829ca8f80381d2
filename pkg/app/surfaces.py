"""Parametric surface patches and their differential invariants.

A patch maps a rectangular parameter domain (periodic along some axes) into
R³ and supplies analytic partials: ``d1`` has shape ``(..., 2, 3)`` with
``d1[..., i, :] = ∂ᵢS``, ``d2`` has shape ``(..., 2, 2, 3)`` and ``d3`` has
shape ``(..., 2, 2, 2, 3)``. Every method accepts a single parameter point or a
stacked grid of them.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
from scipy import linalg

from app.curves import PlanarCurve
from app.errors import ImmersionError, OutOfDomainError
from app.fields import CylinderCapField, ScalarField3, SphereCapField, ZeroField
from app.utils import FloatArray, central_partial, relative_mismatch

logger = logging.getLogger("geodesic_lab")

_POLE_MARGIN = 1e-6


@dataclass(frozen=True)
class Domain:
    lower: tuple[float, float]
    upper: tuple[float, float]
    periodic: tuple[bool, bool] = (False, False)

    def contains(self, u: FloatArray, *, slack: float = 0.0) -> FloatArray:
        u = np.asarray(u, dtype=float)
        inside = np.all(np.isfinite(u), axis=-1)
        for axis in range(2):
            if self.periodic[axis]:
                continue
            inside &= u[..., axis] >= self.lower[axis] - slack
            inside &= u[..., axis] <= self.upper[axis] + slack
        return inside

    def check(self, u: FloatArray) -> FloatArray:
        u = np.asarray(u, dtype=float)
        if u.shape[-1:] != (2,):
            raise ValueError(f"parameter points must have a trailing axis of length 2, got shape {u.shape}.")
        if not np.all(self.contains(u, slack=1e-12)):
            raise OutOfDomainError(f"parameter point outside domain {self.lower}..{self.upper}", point=u)
        return u

    def clip(self, u: FloatArray) -> FloatArray:
        out = np.array(u, dtype=float)
        for axis in range(2):
            if not self.periodic[axis]:
                out[..., axis] = np.clip(out[..., axis], self.lower[axis], self.upper[axis])
        return out

    def boundary_distance(self, u: FloatArray) -> float:
        u = np.asarray(u, dtype=float)
        gaps = [math.inf]
        for axis in range(2):
            if not self.periodic[axis]:
                gaps.append(float(u[axis] - self.lower[axis]))
                gaps.append(float(self.upper[axis] - u[axis]))
        return min(gaps)

    def sample_box(self, shrink: float = 0.1) -> tuple[FloatArray, FloatArray]:
        lo = np.array(self.lower, dtype=float)
        hi = np.array(self.upper, dtype=float)
        for axis in range(2):
            if not self.periodic[axis]:
                pad = shrink * (hi[axis] - lo[axis])
                lo[axis] += pad
                hi[axis] -= pad
        return lo, hi


class SurfacePatch(ABC):
    domain: Domain

    def point(self, u: FloatArray, *, check: bool = True) -> FloatArray:
        return self._point(self._arg(u, check))

    def d1(self, u: FloatArray, *, check: bool = True) -> FloatArray:
        return self._d1(self._arg(u, check))

    def d2(self, u: FloatArray, *, check: bool = True) -> FloatArray:
        return self._d2(self._arg(u, check))

    def d3(self, u: FloatArray, *, check: bool = True) -> FloatArray:
        return self._d3(self._arg(u, check))

    @property
    def has_d3(self) -> bool:
        return True

    def charts(self) -> tuple[Chart, ...] | None:
        return None

    def locate(self, x: FloatArray) -> FloatArray:
        raise NotImplementedError(f"{type(self).__name__} has no inverse chart map.")

    def _arg(self, u: FloatArray, check: bool) -> FloatArray:
        if check:
            return self.domain.check(u)
        return np.asarray(u, dtype=float)

    @abstractmethod
    def _point(self, u: FloatArray) -> FloatArray: ...

    @abstractmethod
    def _d1(self, u: FloatArray) -> FloatArray: ...

    @abstractmethod
    def _d2(self, u: FloatArray) -> FloatArray: ...

    def _d3(self, u: FloatArray) -> FloatArray:
        raise NotImplementedError(f"{type(self).__name__} does not supply third partials.")


@dataclass(frozen=True)
class Chart:
    patch: SurfacePatch
    lower_z: float = -math.inf
    upper_z: float = math.inf

    def contains(self, x: FloatArray, *, tol: float = 1e-9) -> bool:
        z = float(np.asarray(x)[2])
        return self.lower_z - tol <= z <= self.upper_z + tol


def _stack_pair(first: FloatArray, second: FloatArray) -> FloatArray:
    return np.stack([first, second], axis=-2)


# ── graph patches ──────────────────────────────────────────────


@dataclass(frozen=True)
class GraphPatch(SurfacePatch):
    """x3 = -½(a1·u1² + a2·u2²) - h(u1, u2) over the square |uᵢ| <= half_width."""

    a1: float
    a2: float
    h: ScalarField3 = field(default_factory=ZeroField)
    half_width: float = 1.0
    domain: Domain = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.a1 < 0 or self.a2 < 0:
            raise ValueError("principal curvatures a1, a2 must be non-negative.")
        if self.half_width <= 0:
            raise ValueError("half_width must be positive.")
        w = float(self.half_width)
        object.__setattr__(self, "domain", Domain((-w, -w), (w, w)))

    @property
    def curvatures(self) -> FloatArray:
        return np.array([self.a1, self.a2], dtype=float)

    def z(self, u: FloatArray) -> FloatArray:
        u = np.asarray(u, dtype=float)
        return self.curvatures * u + self.h.gradient(u)

    def dz(self, u: FloatArray) -> FloatArray:
        """∂ᵢzⱼ = aᵢδᵢⱼ + ∂ᵢ∂ⱼh."""
        return np.diag(self.curvatures) + self.h.hessian(u)

    def _point(self, u: FloatArray) -> FloatArray:
        height = -0.5 * (self.a1 * u[..., 0] ** 2 + self.a2 * u[..., 1] ** 2) - self.h.value(u)
        return np.stack([u[..., 0], u[..., 1], height], axis=-1)

    def _d1(self, u: FloatArray) -> FloatArray:
        z = self.z(u)
        out = np.zeros(u.shape[:-1] + (2, 3))
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = 1.0
        out[..., :, 2] = -z
        return out

    def _d2(self, u: FloatArray) -> FloatArray:
        out = np.zeros(u.shape[:-1] + (2, 2, 3))
        out[..., 2] = -self.dz(u)
        return out

    def _d3(self, u: FloatArray) -> FloatArray:
        out = np.zeros(u.shape[:-1] + (2, 2, 2, 3))
        out[..., 2] = -self.h.third(u)
        return out


def sphere_graph(radius: float = 1.0) -> GraphPatch:
    return GraphPatch(1.0 / radius, 1.0 / radius, SphereCapField(radius), half_width=0.6 * radius)


def cylinder_graph(radius: float = 1.0, axis: int = 0) -> GraphPatch:
    a = [0.0, 0.0]
    a[axis] = 1.0 / radius
    return GraphPatch(a[0], a[1], CylinderCapField(radius, axis), half_width=0.6 * radius)


# ── spheres and cylinders ──────────────────────────────────────


def _sphere_local(lon: FloatArray, lat: FloatArray, order: int) -> FloatArray:
    cl, sl, cp, sp = np.cos(lat), np.sin(lat), np.cos(lon), np.sin(lon)
    zero = np.zeros_like(lon)

    def vec(x: FloatArray, y: FloatArray, z: FloatArray) -> FloatArray:
        return np.stack([x, y, z], axis=-1)

    if order == 0:
        return vec(cl * cp, cl * sp, sl)
    if order == 1:
        return _stack_pair(vec(-cl * sp, cl * cp, zero), vec(-sl * cp, -sl * sp, cl))
    if order == 2:
        pp = vec(-cl * cp, -cl * sp, zero)
        pl = vec(sl * sp, -sl * cp, zero)
        ll = vec(-cl * cp, -cl * sp, -sl)
        return _stack_pair(_stack_pair(pp, pl), _stack_pair(pl, ll))
    ppp = vec(cl * sp, -cl * cp, zero)
    ppl = vec(sl * cp, sl * sp, zero)
    pll = vec(cl * sp, -cl * cp, zero)
    lll = vec(sl * cp, sl * sp, -cl)
    return _stack_pair(
        _stack_pair(_stack_pair(ppp, ppl), _stack_pair(ppl, pll)),
        _stack_pair(_stack_pair(ppl, pll), _stack_pair(pll, lll)),
    )


@dataclass(frozen=True)
class SpherePatch(SurfacePatch):
    """Longitude/latitude chart u = (φ, λ) of the sphere centered at the origin.

    The poles sit on coordinate axis ``axis``; the equator is spanned by the
    next two axes in cyclic order.
    """

    radius: float
    axis: int = 0
    domain: Domain = field(init=False, repr=False)
    _frame: FloatArray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError("radius must be positive.")
        if self.axis not in (0, 1, 2):
            raise ValueError("axis must be 0, 1 or 2.")
        eye = np.eye(3)
        frame = np.stack([eye[(self.axis + 1) % 3], eye[(self.axis + 2) % 3], eye[self.axis]])
        lat = math.pi / 2 - _POLE_MARGIN
        object.__setattr__(self, "_frame", frame)
        object.__setattr__(self, "domain", Domain((-math.pi, -lat), (math.pi, lat), (True, False)))

    def _local(self, u: FloatArray, order: int) -> FloatArray:
        return self.radius * (_sphere_local(u[..., 0], u[..., 1], order) @ self._frame)

    def _point(self, u: FloatArray) -> FloatArray:
        return self._local(u, 0)

    def _d1(self, u: FloatArray) -> FloatArray:
        return self._local(u, 1)

    def _d2(self, u: FloatArray) -> FloatArray:
        return self._local(u, 2)

    def _d3(self, u: FloatArray) -> FloatArray:
        return self._local(u, 3)

    def locate(self, x: FloatArray) -> FloatArray:
        local = self._frame @ np.asarray(x, dtype=float)
        return np.array([math.atan2(local[1], local[0]), math.atan2(local[2], math.hypot(local[0], local[1]))])


def _ring(phi: FloatArray, radius: float, order: int) -> FloatArray:
    shift = order * math.pi / 2
    return np.stack(
        [radius * np.cos(phi + shift), radius * np.sin(phi + shift), np.zeros_like(phi)], axis=-1
    )


@dataclass(frozen=True)
class RoundCylinderPatch(SurfacePatch):
    """u = (φ, x3) on the cylinder of given radius about the x3 axis."""

    radius: float
    height: float = 10.0
    domain: Domain = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError("radius must be positive.")
        h = float(self.height)
        object.__setattr__(self, "domain", Domain((-math.pi, -h), (math.pi, h), (True, False)))

    def _point(self, u: FloatArray) -> FloatArray:
        out = _ring(u[..., 0], self.radius, 0)
        out[..., 2] = u[..., 1]
        return out

    def _d1(self, u: FloatArray) -> FloatArray:
        axial = np.zeros(u.shape[:-1] + (3,))
        axial[..., 2] = 1.0
        return _stack_pair(_ring(u[..., 0], self.radius, 1), axial)

    def _d2(self, u: FloatArray) -> FloatArray:
        out = np.zeros(u.shape[:-1] + (2, 2, 3))
        out[..., 0, 0, :] = _ring(u[..., 0], self.radius, 2)
        return out

    def _d3(self, u: FloatArray) -> FloatArray:
        out = np.zeros(u.shape[:-1] + (2, 2, 2, 3))
        out[..., 0, 0, 0, :] = _ring(u[..., 0], self.radius, 3)
        return out

    def locate(self, x: FloatArray) -> FloatArray:
        x = np.asarray(x, dtype=float)
        return np.array([math.atan2(x[1], x[0]), x[2]])


@dataclass(frozen=True)
class EllipticCylinderPatch(SurfacePatch):
    profile: PlanarCurve
    height: float = 10.0
    domain: Domain = field(init=False, repr=False)

    def __post_init__(self) -> None:
        h = float(self.height)
        period = self.profile.period
        object.__setattr__(self, "domain", Domain((0.0, -h), (period, h), (True, False)))

    def _lift(self, planar: FloatArray) -> FloatArray:
        return np.concatenate([planar, np.zeros(planar.shape[:-1] + (1,))], axis=-1)

    def _point(self, u: FloatArray) -> FloatArray:
        out = self._lift(self.profile.point(u[..., 0]))
        out[..., 2] = u[..., 1]
        return out

    def _d1(self, u: FloatArray) -> FloatArray:
        axial = np.zeros(u.shape[:-1] + (3,))
        axial[..., 2] = 1.0
        return _stack_pair(self._lift(self.profile.d1(u[..., 0])), axial)

    def _d2(self, u: FloatArray) -> FloatArray:
        out = np.zeros(u.shape[:-1] + (2, 2, 3))
        out[..., 0, 0, :] = self._lift(self.profile.d2(u[..., 0]))
        return out

    def _d3(self, u: FloatArray) -> FloatArray:
        out = np.zeros(u.shape[:-1] + (2, 2, 2, 3))
        out[..., 0, 0, 0, :] = self._lift(self.profile.d3(u[..., 0]))
        return out


@dataclass(frozen=True)
class CappedCylinderPatch(SurfacePatch):
    """Half-infinite round cylinder closed by a hemisphere, u = (φ, s).

    s >= 0 is the height on the cylinder; s < 0 is arc length below the seam
    along a meridian of the cap, so the surface is C¹ but its second
    partials jump across s = 0.
    """

    radius: float
    height: float = 10.0
    domain: Domain = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError("radius must be positive.")
        bottom = -(math.pi / 2 - _POLE_MARGIN) * self.radius
        object.__setattr__(
            self, "domain", Domain((-math.pi, bottom), (math.pi, float(self.height)), (True, False))
        )

    def _split(self, u: FloatArray, order: int) -> FloatArray:
        phi, s = u[..., 0], u[..., 1]
        lat = np.minimum(s, 0.0) / self.radius
        cap = self.radius * _sphere_local(phi, lat, order)
        # each s-derivative of λ = s/R brings a factor 1/R
        per_index = np.array([1.0, 1.0 / self.radius])
        for axis in range(order):
            shape = [1] * (order + 1)
            shape[axis] = 2
            cap = cap * per_index.reshape(shape)
        side = self._side(u, order)
        mask = (s >= 0.0).reshape(s.shape + (1,) * (order + 1))
        return np.where(mask, side, cap)

    def _side(self, u: FloatArray, order: int) -> FloatArray:
        phi = u[..., 0]
        if order == 0:
            out = _ring(phi, self.radius, 0)
            out[..., 2] = u[..., 1]
            return out
        out = np.zeros(u.shape[:-1] + (2,) * order + (3,))
        index = (Ellipsis,) + (0,) * order + (slice(None),)
        out[index] = _ring(phi, self.radius, order)
        if order == 1:
            out[..., 1, 2] = 1.0
        return out

    def _point(self, u: FloatArray) -> FloatArray:
        return self._split(u, 0)

    def _d1(self, u: FloatArray) -> FloatArray:
        return self._split(u, 1)

    def _d2(self, u: FloatArray) -> FloatArray:
        return self._split(u, 2)

    def _d3(self, u: FloatArray) -> FloatArray:
        return self._split(u, 3)

    def charts(self) -> tuple[Chart, ...]:
        return (
            Chart(RoundCylinderPatch(self.radius, self.height), lower_z=0.0),
            Chart(SpherePatch(self.radius, axis=2), upper_z=0.0),
        )

    def locate(self, x: FloatArray) -> FloatArray:
        x = np.asarray(x, dtype=float)
        phi = math.atan2(x[1], x[0])
        if x[2] >= 0.0:
            return np.array([phi, x[2]])
        return np.array([phi, self.radius * math.atan2(x[2], math.hypot(x[0], x[1]))])


# ── offsets ────────────────────────────────────────────────────


@dataclass(frozen=True)
class NormalJet:
    normal: FloatArray
    d1: FloatArray
    d2: FloatArray | None = None


def normal_jet(patch: SurfacePatch, u: FloatArray, *, order: int = 2, check: bool = True) -> NormalJet:
    """Unit normal n = (∂₁S × ∂₂S)/|∂₁S × ∂₂S| and its parameter partials up to ``order``."""
    s1 = patch.d1(u, check=check)
    s2 = patch.d2(u, check=check)
    big_n = np.cross(s1[..., 0, :], s1[..., 1, :])
    nu = np.linalg.norm(big_n, axis=-1)
    if np.any(nu <= 0.0):
        raise ImmersionError("tangent vectors are parallel", point=np.asarray(u))
    n = big_n / nu[..., None]
    # ∂ᵢN = S_1i × S_2 + S_1 × S_2i
    d_big_n = np.cross(s2[..., 0, :, :], s1[..., None, 1, :]) + np.cross(s1[..., None, 0, :], s2[..., 1, :, :])
    n_dn = np.einsum("...k,...ik->...i", n, d_big_n)
    dn = (d_big_n - n[..., None, :] * n_dn[..., :, None]) / nu[..., None, None]
    if order < 2:
        return NormalJet(n, dn)

    s3 = patch.d3(u, check=check)
    dd_big_n = (
        np.cross(s3[..., 0, :, :, :], s1[..., None, None, 1, :])
        + np.cross(s2[..., 0, :, None, :], s2[..., 1, None, :, :])
        + np.cross(s2[..., 0, None, :, :], s2[..., 1, :, None, :])
        + np.cross(s1[..., None, None, 0, :], s3[..., 1, :, :, :])
    )
    dn_dbig = np.einsum("...jk,...ik->...ij", dn, d_big_n)
    n_ddbig = np.einsum("...k,...ijk->...ij", n, dd_big_n)
    ddn = (
        -dn[..., None, :, :] * n_dn[..., :, None, None]
        - n[..., None, None, :] * dn_dbig[..., :, :, None]
        + dd_big_n
        - n[..., None, None, :] * n_ddbig[..., :, :, None]
        - dn[..., :, None, :] * n_dn[..., None, :, None]
    ) / nu[..., None, None, None]
    return NormalJet(n, dn, ddn)


@dataclass(frozen=True)
class OffsetPatch(SurfacePatch):
    """S + r·n over the base patch's domain. Supplies partials through order 2."""

    base: SurfacePatch
    r: float
    domain: Domain = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.r < 0:
            raise ValueError("offset distance must be non-negative.")
        object.__setattr__(self, "domain", self.base.domain)

    @property
    def has_d3(self) -> bool:
        return False

    def _point(self, u: FloatArray) -> FloatArray:
        jet = normal_jet(self.base, u, order=1, check=False)
        return self.base.point(u, check=False) + self.r * jet.normal

    def _d1(self, u: FloatArray) -> FloatArray:
        jet = normal_jet(self.base, u, order=1, check=False)
        return self.base.d1(u, check=False) + self.r * jet.d1

    def _d2(self, u: FloatArray) -> FloatArray:
        jet = normal_jet(self.base, u, order=2, check=False)
        return self.base.d2(u, check=False) + self.r * jet.d2


# ── invariants ─────────────────────────────────────────────────


def evaluate(patch: SurfacePatch, u: FloatArray) -> FloatArray:
    return patch.point(u)


def z_fields(patch: GraphPatch, u: FloatArray) -> tuple[float, float]:
    z = patch.z(patch.domain.check(u))
    return float(z[0]), float(z[1])


@dataclass(frozen=True)
class FundamentalForms:
    g11: float
    g12: float
    g22: float
    det: float
    L: float
    M: float
    N: float
    normal: FloatArray
    V: float | None = None

    @property
    def metric(self) -> FloatArray:
        return np.array([[self.g11, self.g12], [self.g12, self.g22]])

    @property
    def second(self) -> FloatArray:
        return np.array([[self.L, self.M], [self.M, self.N]])


def _metric(d1: FloatArray) -> FloatArray:
    return np.einsum("...ik,...jk->...ij", d1, d1)


def _require_immersed(g: FloatArray, u: FloatArray) -> float:
    det = float(g[0, 0] * g[1, 1] - g[0, 1] ** 2)
    if not det > 1e-14 * max(float(g[0, 0] * g[1, 1]), 1e-300):
        raise ImmersionError(f"degenerate metric at u={u!r}", point=u, det=det)
    return det


def fundamental_forms(patch: SurfacePatch, u: FloatArray, *, check: bool = True) -> FundamentalForms:
    u = patch.domain.check(u) if check else np.asarray(u, dtype=float)
    if isinstance(patch, GraphPatch):
        z = patch.z(u)
        g = np.eye(2) + np.outer(z, z)
        det = _require_immersed(g, u)
        v = math.sqrt(1.0 + float(z @ z))
        normal = np.array([z[0], z[1], 1.0]) / v
        second = patch.dz(u) / v
        return FundamentalForms(g[0, 0], g[0, 1], g[1, 1], det, second[0, 0], second[0, 1], second[1, 1], normal, v)

    d1 = patch.d1(u, check=False)
    g = _metric(d1)
    det = _require_immersed(g, u)
    big_n = np.cross(d1[0], d1[1])
    normal = big_n / np.linalg.norm(big_n)
    second = -np.einsum("ijk,k->ij", patch.d2(u, check=False), normal)
    return FundamentalForms(g[0, 0], g[0, 1], g[1, 1], det, second[0, 0], second[0, 1], second[1, 1], normal)


@dataclass(frozen=True)
class PrincipalCurvatures:
    k1: float
    k2: float
    dir1: FloatArray
    dir2: FloatArray


def principal_curvatures(patch: SurfacePatch, u: FloatArray) -> PrincipalCurvatures:
    forms = fundamental_forms(patch, u)
    values, vectors = linalg.eigh(forms.second, forms.metric)
    return PrincipalCurvatures(float(values[1]), float(values[0]), vectors[:, 1], vectors[:, 0])


class ChristoffelMethod(StrEnum):
    auto = "auto"
    closed_form = "closed_form"
    metric = "metric"
    finite_difference = "finite_difference"


@dataclass(frozen=True)
class Christoffel:
    gamma: FloatArray  # gamma[k, i, j]
    method: ChristoffelMethod


def _christoffel_from_metric_derivs(g: FloatArray, dg: FloatArray) -> FloatArray:
    # dg[l, i, j] = ∂ₗ g_ij
    g_inv = np.linalg.inv(g)
    term = np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg
    return 0.5 * np.einsum("kl,lij->kij", g_inv, term)


def christoffel(
    patch: SurfacePatch,
    u: FloatArray,
    *,
    method: ChristoffelMethod | str = ChristoffelMethod.auto,
    check: bool = True,
    fd_scale: float = 1e-5,
) -> Christoffel:
    method = ChristoffelMethod(method)
    if method == ChristoffelMethod.auto:
        method = ChristoffelMethod.closed_form if isinstance(patch, GraphPatch) else ChristoffelMethod.metric
    u = patch.domain.check(u) if check else np.asarray(u, dtype=float)

    if method == ChristoffelMethod.closed_form:
        if not isinstance(patch, GraphPatch):
            raise ValueError("the closed-form Christoffel symbols exist only for graph patches.")
        z = patch.z(u)
        g = np.eye(2) + np.outer(z, z)
        det = _require_immersed(g, u)
        gamma = np.einsum("k,ij->kij", z, patch.dz(u)) / det
        return Christoffel(gamma, method)

    d1 = patch.d1(u, check=False)
    g = _metric(d1)
    _require_immersed(g, u)
    if method == ChristoffelMethod.metric:
        d2 = patch.d2(u, check=False)
        dg = np.einsum("lik,jk->lij", d2, d1) + np.einsum("ik,ljk->lij", d1, d2)
    else:
        dg = np.stack(
            [
                central_partial(lambda p: _metric(patch.d1(p, check=False)), u, axis, scale=fd_scale)
                for axis in range(2)
            ]
        )
    return Christoffel(_christoffel_from_metric_derivs(g, dg), method)


def check_derivatives(patch: SurfacePatch, u: FloatArray, *, scale: float = 1e-5) -> dict[int, float]:
    u = patch.domain.check(u)
    ladder = [patch.point, patch.d1, patch.d2]
    if patch.has_d3:
        ladder.append(patch.d3)
    report: dict[int, float] = {}
    for order in range(1, len(ladder)):
        lower, upper = ladder[order - 1], ladder[order]
        analytic = upper(u, check=False)
        mismatch = 0.0
        for axis in range(2):
            approx = central_partial(lambda p: lower(p, check=False), u, axis, scale=scale)
            mismatch = max(mismatch, relative_mismatch(analytic[axis], approx))
        report[order] = mismatch
    logger.debug("derivative check %s at %s: %s", type(patch).__name__, u, report)
    return report
