from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Sequence

from pydantic import ValidationError

from app.config import Settings, get_settings
from app.errors import GeometryError, OutOfDomainError
from app.experiments import ExperimentService
from app.models import ALL_EXPERIMENTS, ExperimentName, RunConfig
from app.reporting import emit_csv

logger = logging.getLogger("geodesic_lab")

EXIT_OK = 0
EXIT_FAILED_ROWS = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _tolerance_override(token: str) -> tuple[str, float]:
    label, sep, value = token.rpartition("=")
    if not sep or not label.strip():
        raise argparse.ArgumentTypeError(f"expected LABEL=VALUE, got {token!r}")
    try:
        tolerance = float(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"tolerance for {label!r} is not a number: {value!r}") from exc
    return label.strip(), tolerance


def build_parser(settings: Settings) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geodesic-lab", description=f"{settings.app_name} {settings.app_version}")
    commands = parser.add_subparsers(dest="command", required=True)

    run_cmd = commands.add_parser("run", help="Run experiments and write one CSV table per experiment.")
    names = ", ".join(name.value for name in ExperimentName)
    run_cmd.add_argument("--experiment", default=ALL_EXPERIMENTS, help=f"One of: {names}, all (default: all).")
    run_cmd.add_argument("--out", type=Path, default=Path(settings.out_dir), help="Output directory.")
    run_cmd.add_argument("--seed", type=int, default=settings.seed, help="Random seed.")
    run_cmd.add_argument("--r", type=float, default=None, help="Scenario scale (round-cylinder, capped-cylinder).")
    run_cmd.add_argument("--plot", action="store_true", help="Also write SVG figures where an experiment has one.")
    run_cmd.add_argument(
        "--tol",
        type=_tolerance_override,
        action="append",
        default=[],
        metavar="LABEL=VALUE",
        help="Override the tolerance of one row; repeatable.",
    )
    run_cmd.add_argument(
        "--log-level",
        type=str.upper,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default=settings.log_level.upper(),
        help="Logging level (default: %(default)s).",
    )
    return parser


def run(config: RunConfig, *, settings: Settings | None = None) -> int:
    settings = settings or get_settings()
    service = ExperimentService(settings)
    started = time.perf_counter()
    failed: list[str] = []
    try:
        config.out_dir.mkdir(parents=True, exist_ok=True)
        for name in config.experiments:
            try:
                report = service.run_one(name, config)
            except OutOfDomainError:
                raise
            except GeometryError as exc:
                logger.error("  %s aborted: %s: %s", name.value, type(exc).__name__, exc)
                failed.append(name.value)
                continue
            path = emit_csv(report, config.out_dir / f"{name.value}.csv")
            logger.info("  wrote %s", path)
            if not report.passed:
                failed.append(name.value)
    except OutOfDomainError as exc:
        print(f"geodesic-lab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"geodesic-lab: cannot write results: {exc}", file=sys.stderr)
        return EXIT_IO

    took_ms = int((time.perf_counter() - started) * 1000)
    logger.info("── done: %d experiments, %d failing in %dms", len(config.experiments), len(failed), took_ms)
    for name in failed:
        logger.info("  failing: %s", name)
    return EXIT_FAILED_ROWS if failed else EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    settings = get_settings()
    parser = build_parser(settings)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    logging.basicConfig(level=logging.INFO, format="%(name)s | %(message)s")
    logger.setLevel(args.log_level)

    try:
        config = RunConfig(
            experiment=args.experiment,
            out_dir=args.out,
            seed=args.seed,
            r=args.r,
            plot=args.plot,
            tol_overrides=dict(args.tol),
        )
    except ValidationError as exc:
        for error in exc.errors():
            print(f"geodesic-lab: {error['msg']}", file=sys.stderr)
        return EXIT_USAGE

    return run(config, settings=settings)


if __name__ == "__main__":
    raise SystemExit(main())
