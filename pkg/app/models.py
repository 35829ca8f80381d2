from __future__ import annotations

from enum import StrEnum
from pathlib import Path

from pydantic import BaseModel, Field, model_validator

from app.utils import sanitize_label


class ExperimentName(StrEnum):
    offset_curvature = "offset-curvature"
    sphere_cylinder_preservation = "sphere-cylinder-preservation"
    geodesic_limit = "geodesic-limit"
    projected_expansion = "projected-expansion"
    rigidity_residual = "rigidity-residual"
    round_cylinder = "round-cylinder"
    capped_cylinder = "capped-cylinder"
    ellipse_foliation = "ellipse-foliation"
    projection_consistency = "projection-consistency"


ALL_EXPERIMENTS = "all"


class ComparisonMode(StrEnum):
    absolute = "absolute"
    relative = "relative"
    at_least = "at_least"

    def accepts(self, measured: float, target: float, tolerance: float) -> bool:
        if self is ComparisonMode.relative:
            return abs(measured - target) <= tolerance * max(abs(target), 1.0)
        if self is ComparisonMode.at_least:
            return measured >= target - tolerance
        return abs(measured - target) <= tolerance


class ReportRow(BaseModel):
    label: str = Field(min_length=1)
    measured: float
    target: float
    tolerance: float = Field(ge=0.0)
    passed: bool
    mode: ComparisonMode = ComparisonMode.absolute

    @model_validator(mode="after")
    def normalize_label(self) -> "ReportRow":
        label = sanitize_label(self.label)
        if not label:
            raise ValueError("Row label must not be blank.")
        self.label = label
        return self


class ExperimentReport(BaseModel):
    name: str
    rows: list[ReportRow] = Field(default_factory=list)
    artifacts: list[str] = Field(default_factory=list)
    warnings: list[str] = Field(default_factory=list)
    took_ms: int = 0

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    @property
    def failed_rows(self) -> list[ReportRow]:
        return [row for row in self.rows if not row.passed]

    def row(self, label: str) -> ReportRow:
        label = sanitize_label(label)
        for row in self.rows:
            if row.label == label:
                return row
        raise KeyError(label)


class RunConfig(BaseModel):
    experiment: str = ALL_EXPERIMENTS
    out_dir: Path = Path("results")
    seed: int = 42
    r: float | None = None
    plot: bool = False
    tol_overrides: dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def validate_experiment(self) -> "RunConfig":
        token = self.experiment.strip().lower()
        if token != ALL_EXPERIMENTS and token not in {name.value for name in ExperimentName}:
            known = ", ".join(name.value for name in ExperimentName)
            raise ValueError(f"Unknown experiment: {self.experiment}. Use one of: {known}, all.")
        self.experiment = token

        overrides: dict[str, float] = {}
        for label, tolerance in self.tol_overrides.items():
            if tolerance < 0:
                raise ValueError(f"Tolerance override for {label!r} must be non-negative.")
            overrides[sanitize_label(label)] = tolerance
        self.tol_overrides = overrides

        if self.r is not None and self.r < 0:
            raise ValueError("`r` must be non-negative.")
        return self

    @property
    def experiments(self) -> list[ExperimentName]:
        if self.experiment == ALL_EXPERIMENTS:
            return list(ExperimentName)
        return [ExperimentName(self.experiment)]
