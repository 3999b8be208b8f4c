"""Command-line entry point ``stap-slp``.

Exit codes: 0 success, 1 configuration or validation error, 2 infeasible
scenario, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from dataclasses import replace
from pathlib import Path
from typing import NoReturn

import polars as pl

from . import plotting
from .config import ScenarioConfig, load_config, preset_names
from .designer import CommMode
from .exceptions import InfeasibleScenarioError, ModelError, StapSlpError, ValidationError
from .experiments import SweepAxis, ambiguity_map, run, sweep, trace_table
from .export import error_doc, load_design, write_frame, write_json, write_run
from .geometry import target_steering
from .result import Err, Ok, Result
from .waveforms import VariantKind

logger = logging.getLogger("stap_slp")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_SOLVER = 3


def exit_code(error: StapSlpError) -> int:
    if isinstance(error, InfeasibleScenarioError):
        return EXIT_INFEASIBLE
    if isinstance(error, (ValidationError, ModelError)):
        return EXIT_CONFIG
    return EXIT_SOLVER


def _fail(error: StapSlpError, out_dir: Path | None = None) -> int:
    doc = error_doc(error)
    print(json.dumps(doc), file=sys.stderr)
    if out_dir is not None and isinstance(error, InfeasibleScenarioError):
        write_json(doc, out_dir / "result.json")
    return exit_code(error)


def _render(name: str, frame: pl.DataFrame, path: Path) -> None:
    """Render one PNG; logs and skips when matplotlib is unavailable."""
    try:
        getattr(plotting, name)(frame, path)
    except StapSlpError as e:
        logger.warning("skipping %s: %s", path.name, e)


def _csv_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from e


def _csv_enum[E](cls: type[E]) -> object:
    def parse(text: str) -> list[E]:
        try:
            return [cls(v.strip()) for v in text.split(",") if v.strip()]  # type: ignore[call-arg]
        except ValueError as e:
            choices = ", ".join(str(m) for m in cls)  # type: ignore[attr-defined]
            raise argparse.ArgumentTypeError(f"choose from {choices}") from e

    return parse


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the configuration code; 2 means an infeasible scenario."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="stap-slp",
        description="Joint DFRC waveform and STAP receive-filter design.",
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "-c", "--config", default="desk", help="TOML file or preset name (default: desk)"
        )
        p.add_argument("-o", "--output-dir", type=Path, default=None, help="artifact directory")
        p.add_argument("--scene-seed", type=int, default=None)
        p.add_argument("--channel-seed", type=int, default=None)
        p.add_argument("--symbol-seed", type=int, default=None)

    p_run = sub.add_parser("run", help="design one waveform and its baselines")
    scenario_args(p_run)
    p_run.add_argument(
        "--mode", type=CommMode, choices=list(CommMode), default=CommMode.CI,
        help="communication constraint of the primary line",
    )  # fmt: skip
    p_run.add_argument(
        "--compare", action="store_true", help="also design the ZF and radar-only baselines"
    )
    p_run.add_argument("--heatmap", action="store_true", help="render the ambiguity PNG")
    p_run.add_argument("--plot", action="store_true", help="render trace.png")
    p_run.add_argument(
        "-j", "--jobs", type=int, default=1, help="worker processes for the SER Monte Carlo"
    )

    p_sweep = sub.add_parser("sweep", help="SINR over one scenario axis")
    scenario_args(p_sweep)
    p_sweep.add_argument("--axis", type=SweepAxis, choices=list(SweepAxis), required=True)
    p_sweep.add_argument("--values", type=_csv_floats, required=True, help="e.g. 0,5,10")
    p_sweep.add_argument(
        "--variants", type=_csv_enum(VariantKind), default=None,
        help="comma list of cm,papr,cms (default: the config variant)",
    )  # fmt: skip
    p_sweep.add_argument(
        "--modes", type=_csv_enum(CommMode), default=[CommMode.CI],
        help="comma list of ci,zf,radar_only",
    )  # fmt: skip
    p_sweep.add_argument("-j", "--jobs", type=int, default=1, help="worker processes")
    p_sweep.add_argument("--plot", action="store_true", help="render sweep.png")
    p_sweep.add_argument("--no-progress", action="store_true")

    p_amb = sub.add_parser("ambiguity", help="cross-ambiguity map of a stored design")
    scenario_args(p_amb)
    p_amb.add_argument("--result", type=Path, required=True, help="result.json of a run")
    p_amb.add_argument("--line", default=None, help="line label, e.g. cm/ci")
    p_amb.add_argument("--points", type=int, default=101)
    p_amb.add_argument("--heatmap", action="store_true")

    p_val = sub.add_parser("validate-config", help="parse and check a configuration")
    p_val.add_argument("-c", "--config", default="desk")

    sub.add_parser("presets", help="list shipped presets")
    return parser


def _configure_logging(verbosity: int) -> None:
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s %(message)s")


def _load(args: argparse.Namespace) -> Result[ScenarioConfig, StapSlpError]:
    return load_config(args.config).map(
        lambda cfg: cfg.with_seeds(
            scene=args.scene_seed, channel=args.channel_seed, symbol=args.symbol_seed
        )
    )


def cmd_run(args: argparse.Namespace) -> int:
    loaded = _load(args)
    if loaded.is_err():
        return _fail(loaded.unwrap_err())
    config = loaded.unwrap()
    if args.compare:
        baselines = (*config.outputs.baselines, CommMode.ZF, CommMode.NONE)
        outputs = replace(config.outputs, baselines=tuple(dict.fromkeys(baselines)))
        config = replace(config, outputs=outputs)
    out_dir = config.output_dir(args.output_dir)
    result = run(config, args.mode, jobs=args.jobs)
    if result.is_err():
        return _fail(result.unwrap_err(), out_dir)
    outcome = result.unwrap()
    write_run(outcome, out_dir)
    primary = outcome.primary
    if config.outputs.ambiguity or args.heatmap:
        steering = target_steering(config.array, config.target.model())
        frame = ambiguity_map(
            config.array, primary, config.outputs.ambiguity_points, target_steering_vec=steering
        )
        write_frame(frame, out_dir / "ambiguity.csv", "ambiguity")
        if config.outputs.heatmap or args.heatmap:
            _render("plot_ambiguity", frame, out_dir / "ambiguity.png")
    if args.plot:
        _render("plot_trace", trace_table(outcome), out_dir / "trace.png")
    for label, r in outcome.lines.items():
        print(f"{label}: sinr_db={r.sinr_db:.4f} iterations={r.iterations} status={r.status}")
    for label, e in outcome.errors.items():
        print(f"{label}: failed ({type(e).__name__}: {e})")
    logger.info("primary line %s sinr_db=%.4f", primary.label, primary.sinr_db)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    loaded = _load(args)
    if loaded.is_err():
        return _fail(loaded.unwrap_err())
    config = loaded.unwrap()
    kinds = args.variants or [config.variant.kind]
    try:
        frame = sweep(
            config,
            args.axis,
            args.values,
            kinds,
            args.modes,
            jobs=args.jobs,
            progress=not args.no_progress,
        )
    except StapSlpError as e:
        return _fail(e)
    out_dir = config.output_dir(args.output_dir)
    path = write_frame(frame, out_dir / f"sweep_{args.axis}.csv", "sweep")
    if args.plot:
        _render("plot_sweep", frame, out_dir / f"sweep_{args.axis}.png")
    print(frame.select("value", "line", "sinr_db", "status"))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_ambiguity(args: argparse.Namespace) -> int:
    loaded = _load(args)
    if loaded.is_err():
        return _fail(loaded.unwrap_err())
    config = loaded.unwrap()
    try:
        x, w = load_design(args.result, args.line)
    except (OSError, KeyError, json.JSONDecodeError) as e:
        return _fail(ValidationError(f"cannot read design: {e}", field="result", cause=e))
    except StapSlpError as e:
        return _fail(e)
    steering = target_steering(config.array, config.target.model())
    try:
        frame = ambiguity_map(config.array, (x, w), args.points, target_steering_vec=steering)
    except StapSlpError as e:
        return _fail(e)
    out_dir = config.output_dir(args.output_dir)
    path = write_frame(frame, out_dir / "ambiguity.csv", "ambiguity")
    if args.heatmap:
        _render("plot_ambiguity", frame, out_dir / "ambiguity.png")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    match load_config(args.config):
        case Ok(config):
            print(f"{config.name}: ok (waveform length {config.array.waveform_len})")
            return EXIT_OK
        case Err(error):
            return _fail(error)
    return EXIT_CONFIG


def cmd_presets(_: argparse.Namespace) -> int:
    for name in preset_names():
        print(name)
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "ambiguity": cmd_ambiguity,
    "validate-config": cmd_validate,
    "presets": cmd_presets,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
