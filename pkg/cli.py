#!/usr/bin/env python3
"""
DAPAMT Lab - Command Line Interface

Usage:
    python cli.py gen-synth --out data/synth.json
    python cli.py train --dataset data/synth.json --out runs/model.json
    python cli.py evaluate --checkpoint runs/model.json --dataset data/synth.json --out runs/eval.json
    python cli.py gradcheck --out runs/gradcheck.json
"""

import argparse
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from rich.console import Console

from config import Config
from data.dataset import Dataset
from data.ingest import IngestPaths, ingest
from errors import ConfigError, LabError
from graph.checkpoint import ensure_compatible, load_checkpoint, save_checkpoint
from graph.workflow import collect_traces, resolve_model_config
from logging_config import setup_logging
from models import ModelConfig, RunConfig, SynthConfig, load_run_config
from synth.baselines import ABLATION_KINDS, build_ablation
from synth.experiment import run_experiment, sweep_units
from synth.generator import generate
from training.trainer import check_gradients, evaluate, predict, train
from utils.audit import RunAudit
from utils.exporters import ResultExporter
from utils.logger import ExecutionTimer, generate_run_id, get_logger
from utils.output_formatter import OutputFormatter
from utils.output_manager import OutputManager
from utils.progress import SimpleSpinner, TrainingProgress

# Version
__version__ = "0.1.0"

# Console for rich output
console = Console()

# Tiny network used by gradcheck when no --config is given.
GRADCHECK_MODEL = ModelConfig(
    embed_dim=3, lib_hidden=3, dorm_hidden=3, trend_hidden=3, unit_fc_dim=3,
    num_units=2, days=4, attention_dim=3, dropout_rate=0.0,
)
GRADCHECK_DATA = SynthConfig(
    students=4, days=4, informative_days=2, min_history=0, max_history=2,
    profile_vocab_sizes={"gender": 2, "department": 2}, course_catalog=6,
    courses_per_student=2, validation_fraction=0.0, test_fraction=0.0,
)

CommandResult = Tuple[str, Dict[str, Path], bool]


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from e


def _str_list(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    """Parse command line arguments."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration (every field optional)")
    common.add_argument("--seed", type=int, help="Override the seed of the command's config section")
    common.add_argument("--out", type=Path, required=True, help="Primary output file")
    common.add_argument("--verbose", "-v", action="store_true", help="Show logs at LOG_LEVEL on the console")
    common.add_argument("--debug", "-d", action="store_true", help="Enable debug mode with full logging")

    parser = argparse.ArgumentParser(
        description="Profile-aware multi-task prediction of student performance from campus behavior",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Synthetic data, training and evaluation
  python cli.py gen-synth --out data/synth.json --students 1000
  python cli.py train --dataset data/synth.json --out runs/model.json
  python cli.py evaluate --checkpoint runs/model.json --dataset data/synth.json --out runs/eval.json

  # Real CSV exports
  python cli.py ingest --footprints footprints.csv --profiles profiles.csv \\
      --grades grades.csv --borrows borrows.csv --out data/campus.json

  # Variant comparison over five seeds
  python cli.py experiment --dataset data/synth.json --seeds 1,2,3,4,5 --out runs/experiment.json
        """,
    )
    parser.add_argument("--version", action="version", version=f"DAPAMT Lab v{__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("gen-synth", parents=[common], help="Generate a synthetic dataset")
    synth.add_argument("--students", type=int, help="Number of students (overrides the config)")

    ingest_cmd = commands.add_parser("ingest", parents=[common], help="Build a dataset from CSV exports")
    ingest_cmd.add_argument("--footprints", type=Path, required=True)
    ingest_cmd.add_argument("--profiles", type=Path, required=True)
    ingest_cmd.add_argument("--grades", type=Path, required=True)
    ingest_cmd.add_argument("--borrows", type=Path)
    ingest_cmd.add_argument("--semester-start", help="Day 1 of the behavior window (YYYY-MM-DD)")
    ingest_cmd.add_argument("--days", type=int, help="Length of the behavior window")

    train_cmd = commands.add_parser("train", parents=[common], help="Train and save a checkpoint")
    train_cmd.add_argument("--dataset", type=Path, required=True)
    train_cmd.add_argument("--loss-log", type=Path, help="Loss CSV (default: <out stem>.losses.csv)")

    for name, text in (("evaluate", "Per-task MSE of a checkpoint"),
                       ("predict", "Per-student predictions in original units")):
        sub = commands.add_parser(name, parents=[common], help=text)
        sub.add_argument("--checkpoint", type=Path, required=True)
        sub.add_argument("--dataset", type=Path, required=True)
        sub.add_argument("--split", choices=["train", "validation", "test", "all"],
                         default="test" if name == "evaluate" else "all")

    attention = commands.add_parser("export-attention", parents=[common], help="Export attention weights as CSV")
    attention.add_argument("--checkpoint", type=Path, required=True)
    attention.add_argument("--dataset", type=Path, required=True)
    attention.add_argument("--students", type=_str_list, help="Comma-separated student ids (default: all)")

    gradcheck = commands.add_parser("gradcheck", parents=[common], help="Finite-difference gradient check")
    gradcheck.add_argument("--tolerance", type=float, default=1e-4)
    gradcheck.add_argument("--epsilon", type=float, default=1e-5)

    experiment = commands.add_parser("experiment", parents=[common], help="Compare the full model with its variants")
    experiment.add_argument("--dataset", type=Path, required=True)
    experiment.add_argument("--seeds", type=_int_list, help="Comma-separated seeds (default: five from --seed)")
    experiment.add_argument("--models", type=_str_list, default=list(ABLATION_KINDS),
                            help=f"Comma-separated subset of {', '.join(ABLATION_KINDS)}")

    sweep = commands.add_parser("sweep-units", parents=[common], help="Test MSE per number of interaction units")
    sweep.add_argument("--dataset", type=Path, required=True)
    sweep.add_argument("--units", type=_int_list, default=[1, 2, 3, 4, 5])
    sweep.add_argument("--seeds", type=_int_list)

    return parser


def setup_logging_for_cli(verbose: bool, debug: bool) -> None:
    """Configure logging based on CLI flags."""
    if debug:
        level = "DEBUG"
    elif verbose:
        level = Config.LOG_LEVEL
    else:
        level = "WARNING"

    setup_logging(
        log_dir=Config.LOG_DIR,
        level=level,
        format_type=Config.LOG_FORMAT,
        enable_console=verbose or debug,
    )


def apply_overrides(args: argparse.Namespace, run_config: RunConfig) -> RunConfig:
    """Fold --seed and command-specific flags into the run configuration."""
    update: Dict[str, object] = {}
    if args.seed is not None:
        update = {
            "synth": run_config.synth.model_copy(update={"seed": args.seed}),
            "ingest": run_config.ingest.model_copy(update={"seed": args.seed}),
            "train": run_config.train.model_copy(update={"seed": args.seed}),
        }
    resolved = run_config.model_copy(update=update)
    if args.command == "gen-synth" and args.students is not None:
        if args.students <= 0:
            raise ConfigError(f"--students must be positive, got {args.students}")
        resolved = resolved.model_copy(update={"synth": resolved.synth.model_copy(update={"students": args.students})})
    if args.command == "ingest":
        ingest_update = {}
        if args.semester_start:
            ingest_update["semester_start"] = args.semester_start
        if args.days is not None:
            ingest_update["days"] = args.days
        resolved = resolved.model_copy(update={"ingest": resolved.ingest.model_copy(update=ingest_update)})
    return resolved


def _seeds(args: argparse.Namespace, run_config: RunConfig) -> List[int]:
    if args.seeds:
        return list(args.seeds)
    return [run_config.train.seed + k for k in range(5)]


def _samples(dataset: Dataset, split: str):
    return dataset.samples if split == "all" else dataset.split(split)


# ============================================================================
# Commands
# ============================================================================

def cmd_gen_synth(args, run_config: RunConfig, audit: RunAudit, out: Path) -> CommandResult:
    with SimpleSpinner(console, f"Generating {run_config.synth.students} students..."):
        dataset = generate(run_config.synth)
        dataset.save(out)
    return f"Generated {len(dataset.samples)} students", {"dataset": out}, True


def cmd_ingest(args, run_config: RunConfig, audit: RunAudit, out: Path) -> CommandResult:
    paths = IngestPaths(args.footprints, args.profiles, args.grades, args.borrows)
    for name, path in vars(paths).items():
        if path is not None:
            audit.add_input(name, path)
    with SimpleSpinner(console, "Ingesting CSV exports..."):
        dataset = ingest(paths, run_config.ingest)
        dataset.save(out)
    return f"Ingested {len(dataset.samples)} students", {"dataset": out}, True


def cmd_train(args, run_config: RunConfig, audit: RunAudit, out: Path) -> CommandResult:
    audit.add_input("dataset", args.dataset)
    dataset = Dataset.load(args.dataset)
    with TrainingProgress(console, run_config.train.epochs) as progress:
        result = train(dataset, run_config.model, run_config.train, on_epoch=progress)
    loss_log = args.loss_log or out.with_name(out.stem + ".losses.csv")
    save_checkpoint(out, result.params, result.config, dataset.scalers)
    try:
        ResultExporter().export_loss_log(result.history, loss_log)
    except Exception:
        out.unlink(missing_ok=True)
        raise
    audit.log_phase_complete("train", best_epoch=result.best_epoch, final_total=progress.last_total)
    return (
        f"Trained {result.params.size} parameters for {len(result.history)} epochs",
        {"checkpoint": out, "loss_log": loss_log},
        True,
    )


def _load_pair(args, audit: RunAudit):
    audit.add_input("checkpoint", args.checkpoint)
    audit.add_input("dataset", args.dataset)
    checkpoint = load_checkpoint(args.checkpoint)
    dataset = Dataset.load(args.dataset)
    ensure_compatible(checkpoint, dataset)
    return checkpoint, dataset


def cmd_evaluate(args, run_config: RunConfig, audit: RunAudit, out: Path) -> CommandResult:
    checkpoint, dataset = _load_pair(args, audit)
    report = evaluate(checkpoint.params, _samples(dataset, args.split), checkpoint.scalers,
                      checkpoint.config, split=args.split)
    ResultExporter().export_evaluation(report, out)
    OutputFormatter(console).display_evaluation(report.mse, report.students, report.split)
    return f"Evaluated {report.students} students", {"report": out}, True


def cmd_predict(args, run_config: RunConfig, audit: RunAudit, out: Path) -> CommandResult:
    checkpoint, dataset = _load_pair(args, audit)
    predictions = predict(checkpoint.params, _samples(dataset, args.split), checkpoint.scalers, checkpoint.config)
    ResultExporter().export_predictions(predictions, out)
    return f"Predicted {len(predictions.student_ids)} students", {"predictions": out}, True


def cmd_export_attention(args, run_config: RunConfig, audit: RunAudit, out: Path) -> CommandResult:
    checkpoint, dataset = _load_pair(args, audit)
    samples = dataset.by_ids(args.students) if args.students else dataset.samples
    trace = collect_traces(checkpoint.params, samples, checkpoint.config)
    ResultExporter().export_attention(trace, out)
    return f"Exported attention for {len(trace.student_ids)} students", {"attention": out}, True


def cmd_gradcheck(args, run_config: RunConfig, audit: RunAudit, out: Path) -> CommandResult:
    model_config = run_config.model if args.config else GRADCHECK_MODEL
    data_config = GRADCHECK_DATA.model_copy(update={"days": model_config.days, "seed": run_config.train.seed})
    dataset = generate(data_config)
    config = resolve_model_config(model_config, dataset)
    with SimpleSpinner(console, "Checking gradients..."):
        overall, per_param = check_gradients(dataset.samples, config, eps=args.epsilon, seed=run_config.train.seed)
    passed = overall < args.tolerance
    OutputManager().write_json(out, {
        "max_relative_error": overall,
        "tolerance": args.tolerance,
        "passed": passed,
        "per_parameter": per_param,
    })
    OutputFormatter(console).display_gradcheck(overall, per_param, args.tolerance)
    return f"Gradient check {'passed' if passed else 'failed'}", {"report": out}, passed


def cmd_experiment(args, run_config: RunConfig, audit: RunAudit, out: Path) -> CommandResult:
    audit.add_input("dataset", args.dataset)
    dataset = Dataset.load(args.dataset)
    builders = [build_ablation(kind, run_config.model) for kind in args.models]
    with SimpleSpinner(console, f"Running {len(builders)} models over {len(_seeds(args, run_config))} seeds..."):
        report = run_experiment(dataset, builders, run_config.train, _seeds(args, run_config))
    written = ResultExporter().export_report(report, out)
    OutputFormatter(console).display_experiment(report.to_dict())
    return "Experiment complete", written, True


def cmd_sweep_units(args, run_config: RunConfig, audit: RunAudit, out: Path) -> CommandResult:
    audit.add_input("dataset", args.dataset)
    dataset = Dataset.load(args.dataset)
    with SimpleSpinner(console, f"Sweeping unit counts {args.units}..."):
        report = sweep_units(dataset, args.units, run_config.model, run_config.train, _seeds(args, run_config))
    written = ResultExporter().export_report(report, out)
    OutputFormatter(console).display_sweep(report.to_dict())
    return "Unit sweep complete", written, True


COMMANDS: Dict[str, Callable[..., CommandResult]] = {
    "gen-synth": cmd_gen_synth,
    "ingest": cmd_ingest,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
    "export-attention": cmd_export_attention,
    "gradcheck": cmd_gradcheck,
    "experiment": cmd_experiment,
    "sweep-units": cmd_sweep_units,
}


def run_command(args: argparse.Namespace) -> int:
    """Run one command, write its manifest and return the exit code."""
    formatter = OutputFormatter(console)
    run_id = generate_run_id()
    logger = get_logger(__name__, run_id=run_id, phase=args.command)
    output_manager = OutputManager(Config.OUTPUT_DIR)
    formatter.display_header(args.command, run_id)

    try:
        Config.validate()
        run_config = apply_overrides(args, load_run_config(args.config))
        out = output_manager.resolve(args.out)
        audit = RunAudit(args.command, run_id, args.config, seed=args.seed)
        audit.log_phase_start(args.command)
        with ExecutionTimer(logger, args.command) as timer:
            message, outputs, ok = COMMANDS[args.command](args, run_config, audit, out)
        for name, path in outputs.items():
            audit.add_output(name, path)
        audit.log_phase_complete(args.command, timer.duration, passed=ok)
        manifest = output_manager.write_manifest(out, audit.manifest(run_config))
        outputs["manifest"] = manifest

        if ok:
            formatter.display_success(message, output_manager.describe(outputs))
            return 0
        formatter.display_error(LabError(message))
        return 1

    except KeyboardInterrupt:
        console.print("\n[yellow]⚠️  Interrupted by user[/yellow]")
        return 130

    except LabError as e:
        logger.error(f"{args.command} failed: {e}")
        formatter.display_error(e)
        if args.debug:
            console.print_exception()
        return 1

    except Exception as e:
        logger.exception(f"{args.command} crashed")
        formatter.display_error(e)
        if args.debug:
            console.print_exception()
        return 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for CLI."""
    args = build_parser().parse_args(argv)
    setup_logging_for_cli(args.verbose, args.debug)
    return run_command(args)


if __name__ == "__main__":
    sys.exit(main())
