from __future__ import annotations

from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from app.projection import ProjectionResult


class GeometryError(RuntimeError):
    pass


class OutOfDomainError(GeometryError):
    def __init__(self, message: str, *, point: Any = None) -> None:
        super().__init__(message)
        self.point = point


class ImmersionError(GeometryError):
    def __init__(self, message: str, *, point: Any = None, det: float | None = None) -> None:
        super().__init__(message)
        self.point = point
        self.det = det


class SolverError(GeometryError):
    def __init__(self, message: str, *, best: ProjectionResult | None = None) -> None:
        super().__init__(message)
        self.best = best


class StiffnessError(GeometryError):
    def __init__(self, message: str, *, t: float | None = None) -> None:
        super().__init__(message)
        self.t = t


class SamplingError(GeometryError):
    pass
