from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy import optimize

FloatArray = NDArray[np.float64]


def fd_step(x: float, scale: float = 1e-5) -> float:
    return scale * (1.0 + abs(x))


def central_partial(
    func: Callable[[FloatArray], FloatArray],
    u: FloatArray,
    axis: int,
    *,
    scale: float = 1e-5,
) -> FloatArray:
    u = np.asarray(u, dtype=float)
    h = fd_step(float(u[axis]), scale)
    shift = np.zeros_like(u)
    shift[axis] = h
    return (np.asarray(func(u + shift)) - np.asarray(func(u - shift))) / (2.0 * h)


def relative_mismatch(analytic: FloatArray, approx: FloatArray) -> float:
    analytic = np.asarray(analytic, dtype=float)
    approx = np.asarray(approx, dtype=float)
    scale = max(float(np.max(np.abs(analytic), initial=0.0)), 1.0)
    return float(np.max(np.abs(analytic - approx), initial=0.0)) / scale


def stencil_first(values: Sequence[FloatArray], h: float) -> FloatArray:
    fm2, fm1, _, fp1, fp2 = (np.asarray(v, dtype=float) for v in values)
    return (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h)


def stencil_second(values: Sequence[FloatArray], h: float) -> FloatArray:
    fm2, fm1, f0, fp1, fp2 = (np.asarray(v, dtype=float) for v in values)
    return (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h)


def _ladder(count: int, r: float, scales: Sequence[float] | None) -> list[float]:
    if scales is None:
        return [r ** (-i) for i in range(count)]
    if len(scales) != count:
        raise ValueError("scales must match the number of values.")
    return [float(s) for s in scales]


def richardson_extrapolate(
    base_values: Sequence[float],
    p: float,
    r: float = 2.0,
    *,
    scales: Sequence[float] | None = None,
) -> float:
    # Neville elimination at 0 in x = h^p; a geometric ladder reduces to the Romberg factor r^(p·j)
    n = len(base_values)
    if n < 2:
        raise ValueError("richardson_extrapolate requires at least two base values.")

    x = [h**p for h in _ladder(n, r, scales)]
    vals = [float(v) for v in base_values]
    for j in range(1, n):
        for k in range(n - 1, j - 1, -1):
            factor = x[k - j] / x[k]
            vals[k] = (factor * vals[k] - vals[k - 1]) / (factor - 1.0)
    return vals[-1]


def observed_order(
    values: Sequence[float],
    r: float = 2.0,
    *,
    scales: Sequence[float] | None = None,
    floor: float = 1e-14,
) -> float:
    """Empirical convergence order from the last three entries of a ladder.

    A ladder whose last differences are below ``floor`` has already converged
    and reports ``inf``. With uneven ``scales`` the order p solves
    (h₁ᵖ − h₂ᵖ)/(h₂ᵖ − h₃ᵖ) = |v₁ − v₂|/|v₂ − v₃|.
    """
    if len(values) < 3:
        raise ValueError("observed_order requires at least three values.")
    h1, h2, h3 = _ladder(len(values), r, scales)[-3:]
    a, b, c = (float(v) for v in values[-3:])
    coarse = abs(a - b)
    fine = abs(b - c)
    scale = max(abs(c), 1.0)
    if fine <= floor * scale:
        return math.inf
    if coarse <= floor * scale:
        return 0.0
    if scales is None:
        return math.log(coarse / fine) / math.log(r)

    rho2, rho3 = h2 / h1, h3 / h1
    target = math.log(coarse / fine)

    def mismatch(p: float) -> float:
        return math.log((1.0 - rho2**p) / (rho2**p - rho3**p)) - target

    lo, hi = 1e-6, 40.0
    if mismatch(lo) >= 0.0:
        return 0.0
    if mismatch(hi) <= 0.0:
        return hi
    return float(optimize.brentq(mismatch, lo, hi, xtol=1e-12))


def error_order(errors: Sequence[float], r: float = 2.0, *, floor: float = 1e-14) -> float:
    if len(errors) < 2:
        raise ValueError("error_order requires at least two values.")
    coarse, fine = abs(float(errors[-2])), abs(float(errors[-1]))
    if fine <= floor:
        return math.inf
    if coarse <= floor:
        return 0.0
    return math.log(coarse / fine) / math.log(r)


def is_monotone(values: Sequence[float]) -> bool:
    diffs = np.diff(np.asarray(values, dtype=float))
    return bool(np.all(diffs >= 0.0) or np.all(diffs <= 0.0))


def sanitize_label(label: str) -> str:
    return label.replace(",", ";").replace("\n", " ").strip()
