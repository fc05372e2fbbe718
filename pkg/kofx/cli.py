"""
Koopman operator filtering toolkit - command line front end.

Builds and serializes Koopman models, propagates central moments, runs the
Koopman operator filter and Monte Carlo comparisons against EKF, IKF and UKF,
and writes plot-ready CSV files with a manifest.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, NoReturn, Sequence, Union

import yaml
from colorama import Fore, Style
from colorama import init as colorama_init
from pydantic import ValidationError
from tabulate import tabulate

from kofx import __version__
from kofx.core.config import Settings, get_settings, reload_settings
from kofx.core.exceptions import INPUT_ERROR, ContractViolation, KofxError, ScenarioError
from kofx.core.logging import RunJournal, setup_logging
from kofx.koopman.model import KoopmanModel
from kofx.koopman.serialization import load_model, save_model
from kofx.models.manifest import RunManifest
from kofx.models.moments import MomentSeriesDocument
from kofx.models.scenario import Scenario, load_scenario, preset_names
from kofx.poly.polynomial import set_cleanup_threshold
from kofx.services import output
from kofx.services.pipeline import (
    FILTER_METHODS,
    build_scenario_model,
    compare_scenario,
    filter_scenario,
    measurement_model,
    propagate_scenario,
    sample_scenario,
)

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "KOFX_OUTPUT_DIR"


class Colors:
    """Color codes for terminal output."""

    def __init__(self) -> None:
        if sys.stdout.isatty():
            colorama_init(autoreset=True)
            self.GREEN = Fore.GREEN
            self.RED = Fore.RED
            self.YELLOW = Fore.YELLOW
            self.CYAN = Fore.CYAN
            self.BOLD = Style.BRIGHT
            self.RESET = Style.RESET_ALL
        else:
            self.GREEN = self.RED = self.YELLOW = self.CYAN = self.BOLD = self.RESET = ""


colors = Colors()


def print_error(message: str) -> None:
    print(f"{colors.RED}Error: {message}{colors.RESET}", file=sys.stderr)


def print_success(message: str) -> None:
    print(f"{colors.GREEN}{message}{colors.RESET}")


def print_warning(message: str) -> None:
    print(f"{colors.YELLOW}{message}{colors.RESET}")


def print_table(rows: List[List[Any]], headers: Sequence[str]) -> None:
    print()
    print(tabulate(rows, headers=headers, tablefmt="grid", floatfmt=".6g"))
    print()


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with the input-error code."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        print_error(message)
        sys.exit(INPUT_ERROR)


# Helpers


def output_directory(args: argparse.Namespace, settings: Settings) -> Path:
    """``--out``, else ``KOFX_OUTPUT_DIR``, else the configured directory."""
    directory = Path(args.out or os.environ.get(OUTPUT_DIR_ENV) or settings.output.directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ContractViolation(f"Cannot create output directory {directory}: {e}") from e
    return directory


def parse_times(text: Union[str, None]) -> Union[List[float], None]:
    if text is None:
        return None
    try:
        times = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise ContractViolation(f"--times must be a comma-separated list of numbers: {e}") from e
    if not times:
        raise ContractViolation("--times is empty")
    return times


def parse_methods(text: str) -> List[str]:
    methods = [m.strip().lower() for m in text.split(",") if m.strip()]
    unknown = [m for m in methods if m not in FILTER_METHODS]
    if unknown or not methods:
        raise ContractViolation(f"--methods must be a subset of {','.join(FILTER_METHODS)}")
    return methods


def resolve_scenario(args: argparse.Namespace) -> Scenario:
    """Scenario named by --scenario with the command line overrides applied."""
    scenario = load_scenario(args.scenario)
    model = None
    if args.max_degree is not None:
        model = {**scenario.model.model_dump(), "max_degree": args.max_degree}
    try:
        return scenario.with_overrides(expansion_order=args.order_n, t_final=args.t_final, model=model)
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors())
        raise ScenarioError(f"Invalid override of scenario '{scenario.name}': {problems}") from e


def resolve_model(args: argparse.Namespace, scenario: Scenario, settings: Settings) -> KoopmanModel:
    if getattr(args, "model", None):
        if args.max_degree or args.order_n:
            print_warning("--max-degree/--order-n are ignored when --model is given")
        return load_model(args.model, settings.numerics.inverse_cond_limit)
    return build_scenario_model(scenario, settings)


def model_parameters(args: argparse.Namespace, model: KoopmanModel) -> Dict[str, Any]:
    return {
        "model": args.model if getattr(args, "model", None) else None,
        "max_degree": model.basis.max_degree,
        "expansion_order": model.metadata.get("expansion_order"),
        "frame": model.metadata.get("frame"),
    }


# Command handlers


def cmd_build(args: argparse.Namespace, settings: Settings) -> Dict[str, Any]:
    """Handle build command."""
    scenario = resolve_scenario(args)
    model = build_scenario_model(scenario, settings)
    out = output_directory(args, settings)
    save_model(model, out / "model.json")
    diagnostics = model.diagnostics()
    (out / "diagnostics.json").write_text(json.dumps(diagnostics, indent=2, sort_keys=True) + "\n")
    RunManifest(
        command="build",
        scenario=args.scenario,
        parameters={"max_degree": model.basis.max_degree, "expansion_order": model.metadata.get("expansion_order")},
        output_directory=str(out),
        outputs={"model": "model.json", "diagnostics": "diagnostics.json"},
    ).write(out)

    print_table([[k, v] for k, v in diagnostics.items()], ["Diagnostic", "Value"])
    print_success(f"Model written to {out / 'model.json'}")
    return {"output": str(out)}


def cmd_propagate(args: argparse.Namespace, settings: Settings) -> Dict[str, Any]:
    """Handle propagate command."""
    scenario = resolve_scenario(args)
    model = resolve_model(args, scenario, settings)
    psi = args.psi or settings.moments.default_psi
    times = parse_times(args.times)
    if args.samples < 0:
        raise ContractViolation("--samples must not be negative")
    rows = propagate_scenario(model, scenario, times, psi, settings)
    out = output_directory(args, settings)

    outputs = {"moments": "moments.csv", "tensors": "moments.json"}
    frame = output.moments_frame(rows)
    output.write_csv(frame, out / "moments.csv", settings.output.float_format)
    document = MomentSeriesDocument(
        scenario=scenario.name, psi=psi, epochs=[m.to_document(t) for t, m in rows]
    )
    (out / "moments.json").write_text(document.model_dump_json(indent=2) + "\n")
    parameters: Dict[str, Any] = {**model_parameters(args, model), "psi": psi, "times": [t for t, _ in rows]}
    if args.samples:
        sampled = sample_scenario(scenario, args.samples, times, args.seed, settings)
        output.write_csv(output.sample_moments_frame(sampled), out / "samples.csv", settings.output.float_format)
        outputs["samples"] = "samples.csv"
        parameters["samples"] = args.samples
    RunManifest(
        command="propagate",
        scenario=args.scenario,
        parameters=parameters,
        seed=args.seed if args.samples else None,
        output_directory=str(out),
        outputs=outputs,
    ).write(out)

    table = [[t, *m.sigma_summary()["sigma"]] for t, m in rows]
    print_table(table, ["t"] + [f"sigma_{k + 1}" for k in range(scenario.dim)])
    print_success(f"Moments for {len(rows)} epochs written to {out}")
    return {"output": str(out)}


def cmd_filter(args: argparse.Namespace, settings: Settings) -> Dict[str, Any]:
    """Handle filter command."""
    scenario = resolve_scenario(args)
    measurement = measurement_model(scenario, settings)
    if measurement is None:
        raise ContractViolation(f"Scenario {scenario.name} has no measurement model")
    observations = None
    if not args.simulate:
        observations = output.read_observations(args.observations, measurement.dim)
    model = resolve_model(args, scenario, settings) if args.method == "kof" else None
    run = filter_scenario(scenario, model, observations, args.seed, args.method, settings)
    out = output_directory(args, settings)

    outputs = {"filter": "filter.csv"}
    output.write_csv(output.filter_frame(run, measurement.dim), out / "filter.csv", settings.output.float_format)
    if run.truth is not None and run.truth_epochs is not None:
        output.write_csv(output.truth_frame(run.truth_epochs, run.truth), out / "truth.csv", settings.output.float_format)
        output.write_csv(
            output.observations_frame(run.observations, measurement.dim),
            out / "observations.csv",
            settings.output.float_format,
        )
        outputs.update({"truth": "truth.csv", "observations": "observations.csv"})
    parameters: Dict[str, Any] = {"method": args.method, "simulate": bool(args.simulate)}
    if model is not None:
        parameters.update(model_parameters(args, model))
    if observations is not None:
        parameters["observations"] = args.observations
    RunManifest(
        command="filter",
        scenario=args.scenario,
        parameters=parameters,
        seed=args.seed if args.simulate else None,
        output_directory=str(out),
        outputs=outputs,
    ).write(out)

    final = run.records[-1].state
    print_table([[k + 1, e, s] for k, (e, s) in enumerate(zip(final.estimate, final.sigma))], ["axis", "estimate", "sigma"])
    print_success(f"{args.method.upper()} output for {len(run.records)} epochs written to {out}")
    return {"output": str(out)}


def cmd_compare(args: argparse.Namespace, settings: Settings) -> Dict[str, Any]:
    """Handle compare command."""
    scenario = resolve_scenario(args)
    methods = parse_methods(args.methods)
    runs = args.runs or settings.montecarlo.runs
    seed = settings.montecarlo.seed if args.seed is None else args.seed
    if args.workers:
        settings = settings.model_copy(
            update={"montecarlo": settings.montecarlo.model_copy(update={"workers": args.workers})}
        )
    model = resolve_model(args, scenario, settings) if "kof" in methods else None
    reports, failed = compare_scenario(scenario, methods, runs, seed, model, settings)
    for method, reason in failed.items():
        print_warning(f"{method} failed: {reason}")
    if not reports:
        raise KofxError("Every compared method failed", code="COMPARISON_FAILED")
    out = output_directory(args, settings)

    outputs = {"comparison": "comparison.csv"}
    output.write_csv(output.comparison_frame(reports), out / "comparison.csv", settings.output.float_format)
    for method, report in reports.items():
        report.write_csv(out / f"report_{method}.csv", settings.output.float_format)
        report.write_json(out / f"report_{method}.json")
        outputs[f"report_{method}"] = f"report_{method}.csv"
    parameters: Dict[str, Any] = {"methods": methods, "runs": runs, "failed_methods": failed}
    if model is not None:
        parameters.update(model_parameters(args, model))
    RunManifest(
        command="compare",
        scenario=args.scenario,
        parameters=parameters,
        seed=seed,
        output_directory=str(out),
        outputs=outputs,
    ).write(out)

    table = []
    for method, report in reports.items():
        pv = report.position_velocity()
        table.append([method, report.runs, len(report.failures), *(float(v[-1]) for v in pv.values())])
    print_table(table, ["method", "runs", "failed runs", *(f"final {k}" for k in output.COMPARISON_COLUMNS[2:])])
    print_success(f"Comparison written to {out}")
    return {"output": str(out)}


COMMANDS = {
    "build": cmd_build,
    "propagate": cmd_propagate,
    "filter": cmd_filter,
    "compare": cmd_compare,
}


def _add_scenario_arguments(parser: argparse.ArgumentParser, model: bool = True) -> None:
    parser.add_argument(
        "--scenario",
        required=True,
        help=f"Preset ({', '.join(preset_names())}) or scenario file (.toml, .json, .yaml)",
    )
    parser.add_argument("--max-degree", type=int, default=None, help="Basis total degree")
    parser.add_argument("--order-n", type=int, default=None, help="CRTBP Legendre expansion order N")
    parser.add_argument("--t-final", type=float, default=None, help="Final epoch of the scenario horizon")
    if model:
        parser.add_argument("--model", default=None, help="Reuse a model artifact written by 'build'")
    parser.add_argument("--out", default=None, help=f"Output directory (default: ${OUTPUT_DIR_ENV} or config)")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="kofx",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--config", default=None, help="Path to a YAML settings file")
    parser.add_argument("--log-level", default=None, help="Override the configured log level")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    build_p = subparsers.add_parser("build", help="Build and serialize a Koopman model")
    _add_scenario_arguments(build_p, model=False)

    propagate_p = subparsers.add_parser("propagate", help="Propagate central moments")
    _add_scenario_arguments(propagate_p)
    propagate_p.add_argument("--psi", type=int, choices=[2, 3, 4], default=None, help="Highest moment order")
    propagate_p.add_argument("--times", default=None, help="Comma-separated epochs (default: scenario grid)")
    propagate_p.add_argument("--samples", type=int, default=0, help="Also sample N integrated truths (default: 0)")
    propagate_p.add_argument("--seed", type=int, default=0, help="Seed for --samples (default: 0)")

    filter_p = subparsers.add_parser("filter", help="Run a filter on observations")
    _add_scenario_arguments(filter_p)
    source = filter_p.add_mutually_exclusive_group(required=True)
    source.add_argument("--observations", default=None, help="CSV with columns t, y_1..y_q")
    source.add_argument("--simulate", action="store_true", help="Simulate truth and measurements")
    filter_p.add_argument("--method", choices=FILTER_METHODS, default="kof", help="Filter (default: kof)")
    filter_p.add_argument("--seed", type=int, default=0, help="Seed for --simulate (default: 0)")

    compare_p = subparsers.add_parser("compare", help="Monte Carlo comparison of filters")
    _add_scenario_arguments(compare_p)
    compare_p.add_argument("--methods", default=",".join(FILTER_METHODS), help="Comma-separated methods")
    compare_p.add_argument("--runs", type=int, default=None, help="Monte Carlo runs (default: config)")
    compare_p.add_argument("--seed", type=int, default=None, help="Base seed (default: config)")
    compare_p.add_argument("--workers", type=int, default=None, help="Concurrent runs (default: config)")
    return parser


def main(argv: Union[Sequence[str], None] = None) -> int:
    """Main CLI entry point; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return INPUT_ERROR

    try:
        settings = reload_settings(args.config) if args.config else get_settings()
        if args.log_level:
            settings = settings.model_copy(
                update={"logging": settings.logging.model_copy(update={"level": args.log_level.lower()})}
            )
    except (ValueError, OSError, yaml.YAMLError) as e:
        print_error(f"Invalid configuration: {e}")
        return INPUT_ERROR
    setup_logging(settings)
    set_cleanup_threshold(settings.numerics.cleanup_threshold)
    journal = RunJournal(settings.logging.journal_file)

    logger.info(f"Starting {args.command} for scenario {args.scenario}")
    try:
        details = COMMANDS[args.command](args, settings)
        journal.record(args.command, args.scenario, "SUCCESS", details)
    except KofxError as e:
        logger.debug(f"{args.command} failed with {e.code}: {e.details}")
        print_error(e.message)
        journal.record(args.command, args.scenario, "FAILED", {"exit_code": e.exit_code, "code": e.code})
        return e.exit_code
    finally:
        journal.close()
    logger.info(f"Finished {args.command}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
