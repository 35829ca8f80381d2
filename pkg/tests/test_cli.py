from __future__ import annotations

import pytest
from pydantic import ValidationError

import app.experiments
from app.config import Settings, get_settings
from app.errors import SamplingError, SolverError
from app.main import EXIT_FAILED_ROWS, EXIT_IO, EXIT_OK, EXIT_USAGE, main, run
from app.models import ExperimentName, RunConfig
from app.reporting import read_csv


@pytest.fixture(autouse=True)
def fresh_settings():
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


def test_run_writes_csv(tmp_path) -> None:
    code = main(["run", "--experiment", "offset-curvature", "--out", str(tmp_path)])

    assert code == EXIT_OK
    report = read_csv(tmp_path / "offset-curvature.csv")
    assert len(report.rows) == 16
    assert report.passed


def test_run_logs_banner(tmp_path, caplog: pytest.LogCaptureFixture) -> None:
    main(["run", "--experiment", "offset-curvature", "--out", str(tmp_path)])

    assert "── offset-curvature" in caplog.text
    assert "0 failing" in caplog.text


def test_unknown_experiment_is_usage_error(tmp_path, capsys: pytest.CaptureFixture[str]) -> None:
    code = main(["run", "--experiment", "nope", "--out", str(tmp_path)])

    assert code == EXIT_USAGE
    assert "Unknown experiment" in capsys.readouterr().err
    assert not list(tmp_path.iterdir())


@pytest.mark.parametrize("token", ["no-equals", "label=abc", "=1e-3"])
def test_malformed_tolerance_is_usage_error(tmp_path, token: str) -> None:
    assert main(["run", "--experiment", "offset-curvature", "--out", str(tmp_path), "--tol", token]) == EXIT_USAGE


def test_missing_command_is_usage_error() -> None:
    assert main([]) == EXIT_USAGE


def test_capped_cylinder_below_unit_scale_is_usage_error(tmp_path) -> None:
    assert main(["run", "--experiment", "capped-cylinder", "--r", "0.5", "--out", str(tmp_path)]) == EXIT_USAGE


def test_unwritable_output_is_io_error(tmp_path) -> None:
    blocker = tmp_path / "results"
    blocker.write_text("not a directory", encoding="utf-8")

    assert main(["run", "--experiment", "offset-curvature", "--out", str(blocker)]) == EXIT_IO


def test_failing_rows_exit_with_one(tmp_path, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr(app.experiments, "offset_curvature_law", lambda a, r: 10.0)

    code = main(["run", "--experiment", "offset-curvature", "--out", str(tmp_path)])

    assert code == EXIT_FAILED_ROWS
    assert not read_csv(tmp_path / "offset-curvature.csv").passed


def test_tolerance_override_reaches_csv(tmp_path) -> None:
    main(["run", "--experiment", "offset-curvature", "--out", str(tmp_path), "--tol", "a=1,r=1=0.5"])

    report = read_csv(tmp_path / "offset-curvature.csv")

    assert report.row("a=1;r=1").tolerance == 0.5
    assert report.row("a=2;r=1").tolerance == 1e-6


def test_runs_are_byte_identical(tmp_path) -> None:
    first, second = tmp_path / "first", tmp_path / "second"
    for out in (first, second):
        assert main(["run", "--experiment", "geodesic-limit", "--seed", "3", "--out", str(out)]) == EXIT_OK

    assert (first / "geodesic-limit.csv").read_bytes() == (second / "geodesic-limit.csv").read_bytes()


def test_run_config_normalizes_input() -> None:
    config = RunConfig(experiment=" Capped-Cylinder ", tol_overrides={"a,b": 0.1})

    assert config.experiment == "capped-cylinder"
    assert config.experiments == [ExperimentName.capped_cylinder]
    assert config.tol_overrides == {"a;b": 0.1}
    assert len(RunConfig().experiments) == len(ExperimentName)


@pytest.mark.parametrize(
    "fields",
    [{"experiment": "nope"}, {"r": -1.0}, {"tol_overrides": {"x": -0.1}}],
)
def test_run_config_rejects_bad_values(fields: dict) -> None:
    with pytest.raises(ValidationError):
        RunConfig(**fields)


def test_settings_read_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("SEED", "7")
    monkeypatch.setenv("FOOTPOINT_GRID", "16")

    settings = Settings()

    assert settings.seed == 7
    assert settings.footpoint_grid == 16


def test_settings_reject_out_of_range_values(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("CONVEXITY_GRID", "10")

    with pytest.raises(ValidationError):
        Settings()


@pytest.mark.parametrize("error", [SolverError("newton stalled"), SamplingError("too few nodes")])
def test_geometry_failure_inside_experiment_exits_with_one(
    tmp_path, monkeypatch: pytest.MonkeyPatch, caplog: pytest.LogCaptureFixture, error: Exception
) -> None:
    def broken(config, context):
        raise error

    monkeypatch.setitem(app.experiments.RUNNERS, ExperimentName.offset_curvature, broken)

    code = main(["run", "--experiment", "offset-curvature", "--out", str(tmp_path)])

    assert code == EXIT_FAILED_ROWS
    assert "offset-curvature aborted" in caplog.text
    assert not (tmp_path / "offset-curvature.csv").exists()


def test_run_returns_exit_status(tmp_path) -> None:
    config = RunConfig(experiment="offset-curvature", out_dir=tmp_path)

    assert run(config, settings=Settings()) == EXIT_OK
    assert (tmp_path / "offset-curvature.csv").exists()
