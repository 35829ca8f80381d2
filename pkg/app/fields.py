"""Remainder fields h(u1, u2) for graph patches, with analytic partials through order 3.

Every field is vectorized over a trailing parameter axis: ``u`` has shape
``(..., 2)`` and the results have shapes ``(...)``, ``(..., 2)``,
``(..., 2, 2)`` and ``(..., 2, 2, 2)``.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from app.utils import FloatArray


class ScalarField3(ABC):
    @abstractmethod
    def value(self, u: FloatArray) -> FloatArray: ...

    @abstractmethod
    def gradient(self, u: FloatArray) -> FloatArray: ...

    @abstractmethod
    def hessian(self, u: FloatArray) -> FloatArray: ...

    @abstractmethod
    def third(self, u: FloatArray) -> FloatArray: ...

    def origin_defect(self) -> float:
        origin = np.zeros(2)
        parts = [
            np.abs(self.value(origin)),
            np.abs(self.gradient(origin)),
            np.abs(self.hessian(origin)),
        ]
        return float(max(np.max(p) for p in parts))

    def check_origin(self, tol: float = 1e-12) -> None:
        defect = self.origin_defect()
        if defect > tol:
            raise ValueError(
                f"{type(self).__name__} must vanish with its first and second partials at the origin "
                f"(defect {defect:.3e})."
            )


class ZeroField(ScalarField3):
    def value(self, u: FloatArray) -> FloatArray:
        return np.zeros(np.shape(u)[:-1])

    def gradient(self, u: FloatArray) -> FloatArray:
        return np.zeros(np.shape(u)[:-1] + (2,))

    def hessian(self, u: FloatArray) -> FloatArray:
        return np.zeros(np.shape(u)[:-1] + (2, 2))

    def third(self, u: FloatArray) -> FloatArray:
        return np.zeros(np.shape(u)[:-1] + (2, 2, 2))

    def __repr__(self) -> str:
        return "ZeroField()"


@dataclass(frozen=True, eq=False)
class PolynomialField(ScalarField3):
    """h = Σ c[i, j] u1^i u2^j."""

    coefficients: FloatArray
    _derivs: dict[tuple[int, int], FloatArray] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        coeffs = np.atleast_2d(np.asarray(self.coefficients, dtype=float))
        object.__setattr__(self, "coefficients", coeffs)
        derivs: dict[tuple[int, int], FloatArray] = {}
        for m1 in range(4):
            for m2 in range(4 - m1):
                c = P.polyder(coeffs, m=m1, axis=0) if m1 else coeffs
                c = P.polyder(c, m=m2, axis=1) if m2 else c
                derivs[(m1, m2)] = c
        object.__setattr__(self, "_derivs", derivs)
        self.check_origin()

    @classmethod
    def quartic_cross(cls, coefficient: float) -> PolynomialField:
        coeffs = np.zeros((3, 3))
        coeffs[2, 2] = coefficient
        return cls(coeffs)

    def _eval(self, m1: int, m2: int, u: FloatArray) -> FloatArray:
        u = np.asarray(u, dtype=float)
        return P.polyval2d(u[..., 0], u[..., 1], self._derivs[(m1, m2)])

    def value(self, u: FloatArray) -> FloatArray:
        return self._eval(0, 0, u)

    def gradient(self, u: FloatArray) -> FloatArray:
        return np.stack([self._eval(1, 0, u), self._eval(0, 1, u)], axis=-1)

    def hessian(self, u: FloatArray) -> FloatArray:
        h11, h12, h22 = self._eval(2, 0, u), self._eval(1, 1, u), self._eval(0, 2, u)
        return np.stack([np.stack([h11, h12], -1), np.stack([h12, h22], -1)], axis=-2)

    def third(self, u: FloatArray) -> FloatArray:
        t = {
            3: self._eval(3, 0, u),
            2: self._eval(2, 1, u),
            1: self._eval(1, 2, u),
            0: self._eval(0, 3, u),
        }
        # index by the number of u1 derivatives in (i, j, k)
        rows = []
        for i in range(2):
            cols = []
            for j in range(2):
                cols.append(np.stack([t[3 - i - j - k] for k in range(2)], axis=-1))
            rows.append(np.stack(cols, axis=-2))
        return np.stack(rows, axis=-3)


def _cap_profile(s: FloatArray, radius: float) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray]:
    """R - sqrt(R² - s²) - s²/(2R) and its first three derivatives in s."""
    w = np.sqrt(radius * radius - s * s)
    f0 = radius - w - s * s / (2.0 * radius)
    f1 = s / w - s / radius
    f2 = 1.0 / w + s * s / w**3 - 1.0 / radius
    f3 = 3.0 * s / w**3 + 3.0 * s**3 / w**5
    return f0, f1, f2, f3


@dataclass(frozen=True)
class SphereCapField(ScalarField3):
    """Remainder that turns the quadratic graph with a1 = a2 = 1/R into the exact sphere of radius R."""

    radius: float

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError("radius must be positive.")

    def _w(self, u: FloatArray) -> tuple[FloatArray, FloatArray]:
        u = np.asarray(u, dtype=float)
        rho2 = np.sum(u * u, axis=-1)
        return u, np.sqrt(self.radius**2 - rho2)

    def value(self, u: FloatArray) -> FloatArray:
        u, w = self._w(u)
        return self.radius - w - np.sum(u * u, axis=-1) / (2.0 * self.radius)

    def gradient(self, u: FloatArray) -> FloatArray:
        u, w = self._w(u)
        return u / w[..., None] - u / self.radius

    def hessian(self, u: FloatArray) -> FloatArray:
        u, w = self._w(u)
        eye = np.eye(2)
        w = w[..., None, None]
        outer = u[..., :, None] * u[..., None, :]
        return eye / w + outer / w**3 - eye / self.radius

    def third(self, u: FloatArray) -> FloatArray:
        u, w = self._w(u)
        eye = np.eye(2)
        w = w[..., None, None, None]
        sym = (
            eye[:, :, None] * u[..., None, None, :]
            + eye[:, None, :] * u[..., None, :, None]
            + eye[None, :, :] * u[..., :, None, None]
        )
        triple = u[..., :, None, None] * u[..., None, :, None] * u[..., None, None, :]
        return sym / w**3 + 3.0 * triple / w**5


@dataclass(frozen=True)
class CylinderCapField(ScalarField3):
    radius: float
    axis: int = 0

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError("radius must be positive.")
        if self.axis not in (0, 1):
            raise ValueError("axis must be 0 or 1.")

    def _profile(self, u: FloatArray) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray]:
        return _cap_profile(np.asarray(u, dtype=float)[..., self.axis], self.radius)

    def value(self, u: FloatArray) -> FloatArray:
        return self._profile(u)[0]

    def gradient(self, u: FloatArray) -> FloatArray:
        f1 = self._profile(u)[1]
        out = np.zeros(np.shape(u)[:-1] + (2,))
        out[..., self.axis] = f1
        return out

    def hessian(self, u: FloatArray) -> FloatArray:
        f2 = self._profile(u)[2]
        out = np.zeros(np.shape(u)[:-1] + (2, 2))
        out[..., self.axis, self.axis] = f2
        return out

    def third(self, u: FloatArray) -> FloatArray:
        f3 = self._profile(u)[3]
        out = np.zeros(np.shape(u)[:-1] + (2, 2, 2))
        out[..., self.axis, self.axis, self.axis] = f3
        return out


@dataclass(frozen=True)
class SwappedField(ScalarField3):
    inner: ScalarField3

    @staticmethod
    def _swap(u: FloatArray) -> FloatArray:
        return np.asarray(u, dtype=float)[..., ::-1]

    def value(self, u: FloatArray) -> FloatArray:
        return self.inner.value(self._swap(u))

    def gradient(self, u: FloatArray) -> FloatArray:
        return self.inner.gradient(self._swap(u))[..., ::-1]

    def hessian(self, u: FloatArray) -> FloatArray:
        return self.inner.hessian(self._swap(u))[..., ::-1, ::-1]

    def third(self, u: FloatArray) -> FloatArray:
        return self.inner.third(self._swap(u))[..., ::-1, ::-1, ::-1]
